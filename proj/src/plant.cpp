#include "mimic/plant.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mimic/error.hpp"
#include "mimic/text_io.hpp"
#include "mimic/trainer.hpp"

namespace mimic {

PlantConfig PlantConfig::uniform(std::size_t dof, double kp, double max_speed, double tick_rate) {
  return {std::vector<double>(dof, kp), std::vector<double>(dof, max_speed), tick_rate};
}

void PlantConfig::validate() const {
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) throw ConfigError("tick rate must be positive");
  if (kp.size() != max_speed.size()) throw ConfigError("kp and max_speed must list the same joints");
  for (std::size_t j = 0; j < kp.size(); ++j) {
    if (!(kp[j] > 0.0) || !std::isfinite(kp[j])) throw ConfigError("kp must be positive (joint " + std::to_string(j) + ")");
    if (!(max_speed[j] > 0.0) || !std::isfinite(max_speed[j])) {
      throw ConfigError("max speed must be positive (joint " + std::to_string(j) + ")");
    }
    if (kp[j] >= 2.0 * tick_rate) {
      throw ConfigError("kp " + text::format_double(kp[j]) + " >= 2 * tick rate makes the discrete loop unstable (joint " +
                        std::to_string(j) + ")");
    }
  }
}

double p_command(double reference, double position, double kp, double max_speed) {
  return std::clamp(kp * (reference - position), -max_speed, max_speed);
}

PlantState step(const PlantState& state, std::span<const double> references, const PlantConfig& config) {
  const std::size_t n = state.positions.size();
  if (references.size() != n || config.dof() != n) {
    throw ShapeError("plant step: " + std::to_string(n) + " joints, " + std::to_string(references.size()) +
                     " references, config for " + std::to_string(config.dof()));
  }
  const double dt = 1.0 / config.tick_rate;
  PlantState next{state.positions, state.time + dt};
  for (std::size_t j = 0; j < n; ++j) {
    next.positions[j] += p_command(references[j], state.positions[j], config.kp[j], config.max_speed[j]) * dt;
  }
  return next;
}

bool TrackingReport::any_attenuated() const { return std::find(attenuated.begin(), attenuated.end(), true) != attenuated.end(); }

TrackingReport tracking_report(const JointTrajectory& desired, const JointTrajectory& attained) {
  if (desired.positions.size() != attained.positions.size() || desired.positions.empty()) {
    throw ShapeError("tracking report needs equally long, non-empty trajectories");
  }
  const std::size_t n = desired.positions.front().size();
  const std::size_t ticks = desired.positions.size();
  TrackingReport r;
  r.max_error.assign(n, 0.0);
  r.rms_error.assign(n, 0.0);
  double total_sq = 0.0;
  std::vector<double> d_min(n, INFINITY), d_max(n, -INFINITY), a_min(n, INFINITY), a_max(n, -INFINITY);
  for (std::size_t k = 0; k < ticks; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = desired.positions[k][j];
      const double a = attained.positions[k][j];
      const double e = d - a;
      r.max_error[j] = std::max(r.max_error[j], std::abs(e));
      r.rms_error[j] += e * e;
      total_sq += e * e;
      d_min[j] = std::min(d_min[j], d);
      d_max[j] = std::max(d_max[j], d);
      a_min[j] = std::min(a_min[j], a);
      a_max[j] = std::max(a_max[j], a);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    r.rms_error[j] = std::sqrt(r.rms_error[j] / static_cast<double>(ticks));
    r.desired_amplitude.push_back((d_max[j] - d_min[j]) / 2.0);
    r.attained_amplitude.push_back((a_max[j] - a_min[j]) / 2.0);
    r.attenuated.push_back(r.attained_amplitude[j] < kAttenuationRatio * r.desired_amplitude[j]);
  }
  r.overall_rms = std::sqrt(total_sq / static_cast<double>(ticks * n));
  return r;
}

SimulationResult simulate(const ReferenceFunction& reference, double duration, const PlantConfig& config,
                          const PlantState& initial) {
  config.validate();
  if (initial.positions.size() != config.dof()) {
    throw ShapeError("initial state has " + std::to_string(initial.positions.size()) + " joints, plant config has " +
                     std::to_string(config.dof()));
  }
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw ValidationError("simulation duration must be non-negative");

  const auto last_tick = static_cast<long>(std::floor(duration * config.tick_rate + 1e-9));
  SimulationResult result;
  PlantState state = initial;
  for (long k = 0; k <= last_tick; ++k) {
    const double t = std::min(static_cast<double>(k) / config.tick_rate, duration);
    std::vector<double> ref = reference(t);
    if (ref.size() != config.dof()) {
      throw ShapeError("reference has " + std::to_string(ref.size()) + " joints, plant has " + std::to_string(config.dof()));
    }
    result.desired.times.push_back(initial.time + t);
    result.attained.times.push_back(initial.time + t);
    result.attained.positions.push_back(state.positions);
    PlantState next = step(state, ref, config);
    result.desired.positions.push_back(std::move(ref));
    state = std::move(next);
  }
  result.report = tracking_report(result.desired, result.attained);
  return result;
}

SimulationResult simulate(const KeyframeMovement& movement, const PlantConfig& config, const PlantState& initial) {
  const MovementPlayer player(movement);
  return simulate([&](double t) { return player.pose(t); }, player.duration(), config, initial);
}

SimulationResult simulate(const TrainedModel& model, const PlantConfig& config, const PlantState& initial) {
  config.validate();
  const Rollout trajectory = rollout(model, config.tick_rate);
  const std::size_t n = model.metadata.dof;
  const double duration = static_cast<double>(trajectory.size() - 1) / config.tick_rate;
  auto reference = [&](double t) {
    const auto k = static_cast<Eigen::Index>(std::lround(t * config.tick_rate));
    std::vector<double> ref(n);
    for (std::size_t j = 0; j < n; ++j) ref[j] = trajectory.outputs(static_cast<Eigen::Index>(j), k);
    return ref;
  };
  return simulate(reference, duration, config, initial);
}

void write_comparison_csv(std::ostream& out, const SimulationResult& result, const std::vector<std::string>& joint_names) {
  out << "time";
  for (const std::string& name : joint_names) out << ',' << name << "_desired," << name << "_attained";
  out << '\n';
  for (std::size_t k = 0; k < result.desired.times.size(); ++k) {
    out << text::format_double(result.desired.times[k]);
    for (std::size_t j = 0; j < joint_names.size(); ++j) {
      out << ',' << text::format_double(result.desired.positions[k][j]) << ','
          << text::format_double(result.attained.positions[k][j]);
    }
    out << '\n';
  }
}

}  // namespace mimic
