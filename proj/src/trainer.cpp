#include "mimic/trainer.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "mimic/error.hpp"
#include "mimic/text_io.hpp"

namespace mimic {

namespace {

constexpr double kFlagThreshold = 0.5;

std::optional<std::size_t> first_flag(const Eigen::MatrixXd& outputs) {
  const Eigen::Index flag_row = outputs.rows() - 1;
  for (Eigen::Index k = 0; k < outputs.cols(); ++k) {
    if (outputs(flag_row, k) >= kFlagThreshold) return static_cast<std::size_t>(k);
  }
  return std::nullopt;
}

double motion_duration(const MotionDataset& dataset) {
  const auto end = dataset.end_index();
  const double start = dataset.sample_times.front();
  return end ? dataset.sample_times[*end] - start : dataset.sample_times.back() - start;
}

}  // namespace

Eigen::VectorXd TrainedModel::predict(double t) const {
  Eigen::VectorXd x(1);
  x(0) = normalization.apply(t);
  return network.forward(x);
}

Eigen::MatrixXd TrainedModel::predict(const std::vector<double>& times) const {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = normalization.apply(times[i]);
  return network.forward_batch(x);
}

double joint_mae(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  const Eigen::Index joints = targets.rows() - 1;
  return (predictions.topRows(joints) - targets.topRows(joints)).cwiseAbs().mean();
}

TrainResult train(const MotionDataset& dataset, const Architecture& architecture, const TrainingSchedule& schedule,
                  const TrainOptions& options) {
  dataset.validate();
  schedule.validate();
  if (architecture.input_dim != 1) {
    throw ShapeError("architecture input must be 1 (time), got " + std::to_string(architecture.input_dim));
  }
  if (architecture.output_dim() != dataset.dof() + 1) {
    throw ShapeError("architecture output " + std::to_string(architecture.output_dim()) + " must equal dof + 1 = " +
                     std::to_string(dataset.dof() + 1));
  }

  MimicNetwork network = initialize(architecture, options.seed, options.init);
  AdamState state(network, options.adam);
  const Eigen::MatrixXd inputs = dataset.inputs();
  const Eigen::MatrixXd& targets = dataset.targets;

  TrainingLog log;
  log.epochs.reserve(static_cast<std::size_t>(schedule.total_epochs()));
  long epoch = 0;
  for (std::size_t phase = 0; phase < schedule.phases.size() && !log.early_stopped; ++phase) {
    if (phase > 0 && schedule.reset_on_phase) state.reset();
    const TrainingPhase& p = schedule.phases[phase];
    for (long e = 0; e < p.epochs; ++e, ++epoch) {
      BackwardResult step = backward(network, inputs, targets);
      if (!std::isfinite(step.loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch), epoch - 1);
      }
      const EpochRecord record{epoch, phase, p.learning_rate, step.loss, joint_mae(step.predictions, targets)};
      log.epochs.push_back(record);
      if (options.on_epoch) options.on_epoch(record);
      if (options.early_stop_mae && record.mae <= *options.early_stop_mae) {
        log.early_stopped = true;
        break;
      }
      try {
        adam_step(state, network, step.gradients, p.learning_rate);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch), epoch);
      }
    }
  }

  ModelMetadata meta;
  meta.name = options.name;
  meta.dof = dataset.dof();
  meta.duration = motion_duration(dataset);
  meta.sample_rate = dataset.sample_rate;
  meta.periodic = dataset.periodic;
  return {TrainedModel{std::move(network), dataset.normalization, meta}, std::move(log)};
}

EvaluationReport evaluate_predictions(const Eigen::MatrixXd& predictions, const MotionDataset& dataset) {
  if (predictions.rows() != dataset.targets.rows() || predictions.cols() != dataset.targets.cols()) {
    throw ShapeError("predictions are " + std::to_string(predictions.rows()) + "x" + std::to_string(predictions.cols()) +
                     ", dataset targets are " + std::to_string(dataset.targets.rows()) + "x" +
                     std::to_string(dataset.targets.cols()));
  }
  EvaluationReport report;
  report.mse = mse_loss(predictions, dataset.targets);
  report.mae = joint_mae(predictions, dataset.targets);
  for (std::size_t j = 0; j < dataset.dof(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    report.per_joint_mae.push_back((predictions.row(r) - dataset.targets.row(r)).cwiseAbs().mean());
  }
  report.predicted_end = first_flag(predictions);
  report.true_end = dataset.end_index();
  if (report.predicted_end && report.true_end) {
    const auto a = static_cast<long>(*report.predicted_end);
    const auto b = static_cast<long>(*report.true_end);
    report.end_time_error = static_cast<std::size_t>(std::abs(a - b));
  } else if (report.predicted_end.has_value() != report.true_end.has_value()) {
    report.end_time_error = dataset.size();
  }
  return report;
}

EvaluationReport evaluate(const TrainedModel& model, const MotionDataset& dataset) {
  if (model.network.output_dim() != dataset.dof() + 1) {
    throw ShapeError("model has " + std::to_string(model.network.output_dim()) + " outputs, dataset needs " +
                     std::to_string(dataset.dof() + 1));
  }
  return evaluate_predictions(model.predict(dataset.sample_times), dataset);
}

Rollout rollout(const TrainedModel& model, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("rate must be positive");
  const double cap = 2.0 * model.metadata.duration;
  Rollout out;
  std::vector<Eigen::VectorXd> columns;
  for (long k = 0;; ++k) {
    const double elapsed = static_cast<double>(k) / rate;
    if (elapsed > cap + 1e-9) break;
    const double t = model.normalization.offset + elapsed;
    Eigen::VectorXd y = model.predict(t);
    out.times.push_back(t);
    const bool ended = y(y.size() - 1) >= kFlagThreshold;
    columns.push_back(std::move(y));
    if (ended) {
      out.end_detected = true;
      break;
    }
  }
  out.outputs.resize(static_cast<Eigen::Index>(model.network.output_dim()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) out.outputs.col(static_cast<Eigen::Index>(k)) = columns[k];
  return out;
}

void write_metadata(std::ostream& out, const TrainedModel& model) {
  const ModelMetadata& m = model.metadata;
  out << "name=" << m.name << '\n'
      << "n=" << m.dof << '\n'
      << "duration=" << text::format_double(m.duration) << '\n'
      << "rate=" << text::format_double(m.sample_rate) << '\n'
      << "time_offset=" << text::format_double(model.normalization.offset) << '\n'
      << "time_scale=" << text::format_double(model.normalization.scale) << '\n'
      << "periodic=" << (m.periodic ? "true" : "false") << '\n';
}

void save_model(const std::filesystem::path& dir, const TrainedModel& model) {
  std::filesystem::create_directories(dir);
  save_weights(dir / kWeightsFile, model.network);
  std::ofstream out(dir / kMetadataFile);
  if (!out) throw Error("cannot write model metadata in " + dir.string());
  write_metadata(out, model);
}

TrainedModel load_model(const std::filesystem::path& dir) {
  MimicNetwork network = load_weights(dir / kWeightsFile);
  std::ifstream in(dir / kMetadataFile);
  if (!in) throw ParseError(0, "cannot open model metadata in " + dir.string());

  std::map<std::string, std::string, std::less<>> values;
  std::map<std::string, std::size_t, std::less<>> lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim_line(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value");
    values[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    lines[std::string(line.substr(0, eq))] = line_no;
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = values.find(key);
    if (it == values.end()) throw ParseError(0, std::string("model metadata lacks '") + key + "'");
    return it->second;
  };
  auto line_of = [&](const char* key) { return lines.find(key)->second; };

  TrainedModel model{std::move(network), {}, {}};
  model.metadata.name = get("name");
  model.metadata.dof = static_cast<std::size_t>(text::parse_long(get("n"), line_of("n")));
  model.metadata.duration = text::parse_double(get("duration"), line_of("duration"));
  model.metadata.sample_rate = text::parse_double(get("rate"), line_of("rate"));
  model.normalization.offset = text::parse_double(get("time_offset"), line_of("time_offset"));
  model.normalization.scale = text::parse_double(get("time_scale"), line_of("time_scale"));
  model.metadata.periodic = text::parse_bool(get("periodic"), line_of("periodic"));
  if (!std::isfinite(model.normalization.offset) || !(model.normalization.scale > 0.0) ||
      !std::isfinite(model.normalization.scale)) {
    throw ParseError(line_of("time_scale"), "normalization must be finite with a positive scale");
  }
  if (model.network.output_dim() != model.metadata.dof + 1) {
    throw ParseError(line_of("n"), "metadata n does not match the network output size");
  }
  return model;
}

void write_training_log(std::ostream& out, const TrainingLog& log) {
  out << "epoch,phase,lr,mse,mae\n";
  for (const EpochRecord& r : log.epochs) {
    out << r.epoch << ',' << r.phase << ',' << text::format_double(r.learning_rate) << ','
        << text::format_double(r.mse) << ',' << text::format_double(r.mae) << '\n';
  }
}

TrainingLog read_training_log(std::istream& in) {
  std::string raw;
  if (!std::getline(in, raw) || text::trim_line(raw) != "epoch,phase,lr,mse,mae") {
    throw ParseError(1, "training log header must be 'epoch,phase,lr,mse,mae'");
  }
  TrainingLog log;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim_line(raw);
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 5) throw ParseError(line_no, "expected 5 fields");
    log.epochs.push_back({text::parse_long(f[0], line_no), static_cast<std::size_t>(text::parse_long(f[1], line_no)),
                          text::parse_double(f[2], line_no), text::parse_double(f[3], line_no),
                          text::parse_double(f[4], line_no)});
  }
  return log;
}

void write_rollout_csv(std::ostream& out, const Rollout& rollout, const std::vector<std::string>& joint_names) {
  out << "time";
  for (const std::string& name : joint_names) out << ',' << name;
  out << ",end_flag\n";
  for (std::size_t k = 0; k < rollout.size(); ++k) {
    out << text::format_double(rollout.times[k]);
    for (Eigen::Index r = 0; r < rollout.outputs.rows(); ++r) {
      out << ',' << text::format_double(rollout.outputs(r, static_cast<Eigen::Index>(k)));
    }
    out << '\n';
  }
}

}  // namespace mimic
