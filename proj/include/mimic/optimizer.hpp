#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mimic/network.hpp"

namespace mimic {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError unless 0 <= beta < 1 and epsilon > 0.
  void validate() const;
};

/// Element-wise Adam update on raw buffers. `step` is the 1-based index of
/// this update (after increment). Every span must have the same length.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, long step, double learning_rate, const AdamConfig& config);

/// Moment accumulators shaped like a network, plus the step counter.
class AdamState {
 public:
  struct LayerMoments {
    Eigen::MatrixXd weight_m, weight_v;
    Eigen::VectorXd bias_m, bias_v;
  };

  explicit AdamState(const MimicNetwork& network, AdamConfig config = {});

  const AdamConfig& config() const noexcept { return config_; }
  long step() const noexcept { return step_; }
  const std::vector<LayerMoments>& moments() const noexcept { return moments_; }

  /// Zeroes the moments and the step counter; hyperparameters are kept.
  void reset();

  bool operator==(const AdamState& other) const;

 private:
  friend void adam_step(AdamState&, MimicNetwork&, const GradientSet&, double);

  AdamConfig config_;
  long step_ = 0;
  std::vector<LayerMoments> moments_;
};

/// One bias-corrected Adam update of every parameter. Throws DivergenceError
/// naming the layer when a gradient is non-finite, ShapeError on shape mismatch.
void adam_step(AdamState& state, MimicNetwork& network, const GradientSet& grads, double learning_rate);

/// Copy of `state` after reset().
AdamState reset_state(AdamState state);

struct TrainingPhase {
  long epochs;
  double learning_rate;
};

struct TrainingSchedule {
  std::vector<TrainingPhase> phases;
  bool reset_on_phase = true;

  long total_epochs() const;
  /// Learning rate of every epoch, in order.
  std::vector<double> expand() const;
  /// Phase index owning each epoch.
  std::vector<std::size_t> phase_of_epoch() const;
  /// Throws ConfigError for an empty schedule, non-positive epochs or rates.
  void validate() const;
};

/// 30000 epochs at 1e-3, then four 5000-epoch phases stepping the rate down by 2e-4.
TrainingSchedule reference_schedule();
/// Same five phases at one tenth of the epochs (5000 total).
TrainingSchedule desk_schedule();
/// "reference" or "desk"; throws ConfigError otherwise.
TrainingSchedule schedule_preset(std::string_view name);

// Text format: one `phase epochs=<int> lr=<float>` line per phase and an
// optional `reset_on_phase=<true|false>` line. '#' starts a comment line.
TrainingSchedule read_schedule(std::istream& in);
void write_schedule(std::ostream& out, const TrainingSchedule& schedule);
TrainingSchedule load_schedule(const std::filesystem::path& path);

}  // namespace mimic
