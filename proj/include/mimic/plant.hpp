#pragma once

// Speed-controlled joints tracked by per-joint proportional controllers,
// integrated with explicit Euler at the control tick rate.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mimic/motion.hpp"

namespace mimic {

struct TrainedModel;

inline constexpr double kDefaultKp = 25.0;
inline constexpr double kDefaultMaxSpeed = 7.0;
inline constexpr double kDefaultTickRate = 50.0;

struct PlantConfig {
  std::vector<double> kp;         ///< 1/s, per joint
  std::vector<double> max_speed;  ///< rad/s, per joint
  double tick_rate = kDefaultTickRate;

  static PlantConfig uniform(std::size_t dof, double kp = kDefaultKp, double max_speed = kDefaultMaxSpeed,
                             double tick_rate = kDefaultTickRate);

  std::size_t dof() const noexcept { return kp.size(); }

  /// Throws ConfigError for non-positive values, mismatched lengths, or
  /// kp >= 2 * tick_rate (the Euler loop would diverge).
  void validate() const;
};

struct PlantState {
  std::vector<double> positions;
  double time = 0.0;
};

/// clamp(kp * (reference - position), -max_speed, max_speed).
double p_command(double reference, double position, double kp, double max_speed);

/// Advances every joint by its commanded speed for one tick.
PlantState step(const PlantState& state, std::span<const double> references, const PlantConfig& config);

/// Row-per-tick joint positions.
struct JointTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> positions;
};

struct TrackingReport {
  std::vector<double> max_error;  ///< per joint, rad
  std::vector<double> rms_error;  ///< per joint, rad
  double overall_rms = 0.0;
  std::vector<double> desired_amplitude;   ///< half peak-to-peak, per joint
  std::vector<double> attained_amplitude;
  /// Joints whose attained amplitude falls below kAttenuationRatio of the desired one.
  std::vector<bool> attenuated;

  bool any_attenuated() const;
};

inline constexpr double kAttenuationRatio = 0.95;

struct SimulationResult {
  JointTrajectory desired;
  JointTrajectory attained;
  TrackingReport report;
};

/// Reference callback: joint targets at time t in [0, duration].
using ReferenceFunction = std::function<std::vector<double>(double)>;

/// Ticks the plant from `initial` over [0, duration], recording the desired
/// reference and attained position at each tick before stepping.
SimulationResult simulate(const ReferenceFunction& reference, double duration, const PlantConfig& config,
                          const PlantState& initial);
SimulationResult simulate(const KeyframeMovement& movement, const PlantConfig& config, const PlantState& initial);
/// References come from a rollout of the model at the tick rate.
SimulationResult simulate(const TrainedModel& model, const PlantConfig& config, const PlantState& initial);

TrackingReport tracking_report(const JointTrajectory& desired, const JointTrajectory& attained);

/// CSV `time,<joint>_desired,<joint>_attained,...`.
void write_comparison_csv(std::ostream& out, const SimulationResult& result, const std::vector<std::string>& joint_names);

}  // namespace mimic
