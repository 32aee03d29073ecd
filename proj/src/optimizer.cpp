#include "mimic/optimizer.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mimic/error.hpp"
#include "mimic/text_io.hpp"

namespace mimic {

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("Adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, long step, double learning_rate, const AdamConfig& config) {
  const std::size_t n = params.size();
  if (grads.size() != n || first_moment.size() != n || second_moment.size() != n) {
    throw ShapeError("adam_update: buffer lengths differ");
  }
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

AdamState::AdamState(const MimicNetwork& network, AdamConfig config) : config_(config) {
  config_.validate();
  for (const DenseLayer& l : network.layers()) {
    moments_.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.biases.size()), Eigen::VectorXd::Zero(l.biases.size())});
  }
}

void AdamState::reset() {
  step_ = 0;
  for (LayerMoments& m : moments_) {
    m.weight_m.setZero();
    m.weight_v.setZero();
    m.bias_m.setZero();
    m.bias_v.setZero();
  }
}

bool AdamState::operator==(const AdamState& other) const {
  if (step_ != other.step_ || moments_.size() != other.moments_.size()) return false;
  if (config_.beta1 != other.config_.beta1 || config_.beta2 != other.config_.beta2 ||
      config_.epsilon != other.config_.epsilon) {
    return false;
  }
  for (std::size_t i = 0; i < moments_.size(); ++i) {
    const LayerMoments& a = moments_[i];
    const LayerMoments& b = other.moments_[i];
    if (a.weight_m != b.weight_m || a.weight_v != b.weight_v || a.bias_m != b.bias_m || a.bias_v != b.bias_v) return false;
  }
  return true;
}

namespace {

std::span<double> as_span(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

void adam_step(AdamState& state, MimicNetwork& network, const GradientSet& grads, double learning_rate) {
  auto& layers = network.mutable_layers();
  if (grads.size() != layers.size() || state.moments_.size() != layers.size()) {
    throw ShapeError("adam_step: gradient set has " + std::to_string(grads.size()) + " layers, network has " +
                     std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads[i].weights.rows() != layers[i].weights.rows() || grads[i].weights.cols() != layers[i].weights.cols() ||
        grads[i].biases.size() != layers[i].biases.size()) {
      throw ShapeError("adam_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    if (!grads[i].weights.allFinite() || !grads[i].biases.allFinite()) {
      throw DivergenceError("non-finite gradient in layer " + std::to_string(i));
    }
  }

  ++state.step_;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    AdamState::LayerMoments& m = state.moments_[i];
    adam_update(as_span(layers[i].weights), as_span(grads[i].weights), as_span(m.weight_m), as_span(m.weight_v),
                state.step_, learning_rate, state.config_);
    adam_update(as_span(layers[i].biases), as_span(grads[i].biases), as_span(m.bias_m), as_span(m.bias_v), state.step_,
                learning_rate, state.config_);
  }
}

AdamState reset_state(AdamState state) {
  state.reset();
  return state;
}

long TrainingSchedule::total_epochs() const {
  long total = 0;
  for (const TrainingPhase& p : phases) total += p.epochs;
  return total;
}

std::vector<double> TrainingSchedule::expand() const {
  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>(total_epochs()));
  for (const TrainingPhase& p : phases) rates.insert(rates.end(), static_cast<std::size_t>(p.epochs), p.learning_rate);
  return rates;
}

std::vector<std::size_t> TrainingSchedule::phase_of_epoch() const {
  std::vector<std::size_t> owner;
  owner.reserve(static_cast<std::size_t>(total_epochs()));
  for (std::size_t i = 0; i < phases.size(); ++i) owner.insert(owner.end(), static_cast<std::size_t>(phases[i].epochs), i);
  return owner;
}

void TrainingSchedule::validate() const {
  if (phases.empty()) throw ConfigError("schedule has no phases");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].epochs <= 0) throw ConfigError("phase " + std::to_string(i + 1) + " must have positive epochs");
    if (!(phases[i].learning_rate > 0.0) || !std::isfinite(phases[i].learning_rate)) {
      throw ConfigError("phase " + std::to_string(i + 1) + " must have a positive learning rate");
    }
  }
}

TrainingSchedule reference_schedule() {
  return {{{30000, 0.001}, {5000, 0.0008}, {5000, 0.0006}, {5000, 0.0004}, {5000, 0.0002}}, true};
}

TrainingSchedule desk_schedule() {
  return {{{3000, 0.001}, {500, 0.0008}, {500, 0.0006}, {500, 0.0004}, {500, 0.0002}}, true};
}

TrainingSchedule schedule_preset(std::string_view name) {
  if (name == "reference") return reference_schedule();
  if (name == "desk") return desk_schedule();
  throw ConfigError("unknown schedule preset '" + std::string(name) + "' (expected reference or desk)");
}

TrainingSchedule read_schedule(std::istream& in) {
  TrainingSchedule schedule;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim_line(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, ' ');
    if (fields[0] == "phase") {
      if (fields.size() != 3) throw ParseError(line_no, "expected 'phase epochs=<int> lr=<float>'");
      const long epochs = text::parse_long(text::expect_field(fields[1], "epochs", line_no), line_no);
      const double lr = text::parse_double(text::expect_field(fields[2], "lr", line_no), line_no);
      schedule.phases.push_back({epochs, lr});
    } else if (fields.size() == 1 && fields[0].starts_with("reset_on_phase=")) {
      schedule.reset_on_phase = text::parse_bool(text::expect_field(fields[0], "reset_on_phase", line_no), line_no);
    } else {
      throw ParseError(line_no, "unrecognized schedule line '" + std::string(line) + "'");
    }
  }
  try {
    schedule.validate();
  } catch (const ConfigError& e) {
    throw ParseError(0, e.what());
  }
  return schedule;
}

void write_schedule(std::ostream& out, const TrainingSchedule& schedule) {
  for (const TrainingPhase& p : schedule.phases) {
    out << "phase epochs=" << p.epochs << " lr=" << text::format_double(p.learning_rate) << '\n';
  }
  out << "reset_on_phase=" << (schedule.reset_on_phase ? "true" : "false") << '\n';
}

TrainingSchedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open schedule file " + path.string());
  return read_schedule(in);
}

}  // namespace mimic
