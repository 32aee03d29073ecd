#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimic/dataset.hpp"
#include "mimic/network.hpp"
#include "mimic/optimizer.hpp"

namespace mimic {

struct ModelMetadata {
  std::string name = "motion";
  std::size_t dof = 0;
  double duration = 0.0;  ///< seconds until the end sample (whole span for periodic data)
  double sample_rate = kDefaultSampleRate;
  bool periodic = false;
};

/// Frozen network together with the time encoding it was trained on.
struct TrainedModel {
  MimicNetwork network;
  TimeNormalization normalization;
  ModelMetadata metadata;

  /// Network output (dof joints + end flag) at absolute time t.
  Eigen::VectorXd predict(double t) const;
  /// One column per time.
  Eigen::MatrixXd predict(const std::vector<double>& times) const;
};

struct EpochRecord {
  long epoch;
  std::size_t phase;
  double learning_rate;
  double mse;  ///< loss before this epoch's update
  double mae;  ///< mean |error| over joint outputs, radians
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  bool early_stopped = false;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  AdamConfig adam;
  InitOptions init{.spread_input_kinks = true};
  /// Stop once the joint MAE reaches this value. Off by default.
  std::optional<double> early_stop_mae;
  std::string name = "motion";
  /// Called after every epoch is logged.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  TrainedModel model;
  TrainingLog log;
};

/// Full-batch Adam, one update per epoch, over every phase of the schedule.
/// Moments are reset at each phase boundary when the schedule asks for it.
/// Throws ShapeError when the architecture does not map 1 input to dof + 1
/// outputs and DivergenceError on a non-finite loss or gradient.
TrainResult train(const MotionDataset& dataset, const Architecture& architecture, const TrainingSchedule& schedule,
                  const TrainOptions& options = {});

/// Mean absolute error over the joint rows (end flag excluded).
double joint_mae(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

struct EvaluationReport {
  double mse = 0.0;
  double mae = 0.0;
  std::vector<double> per_joint_mae;
  /// |first predicted flag >= 0.5 sample - true end sample|. When only one
  /// side has an end, the error is the dataset size.
  std::size_t end_time_error = 0;
  std::optional<std::size_t> predicted_end;
  std::optional<std::size_t> true_end;
};

EvaluationReport evaluate_predictions(const Eigen::MatrixXd& predictions, const MotionDataset& dataset);
EvaluationReport evaluate(const TrainedModel& model, const MotionDataset& dataset);

/// Inference-only playback of a trained model.
struct Rollout {
  std::vector<double> times;
  Eigen::MatrixXd outputs;  ///< (dof + 1) x times.size()
  bool end_detected = false;

  std::size_t size() const noexcept { return times.size(); }
};

/// Sweeps t = offset + k / rate until the end flag reaches 0.5 (that sample
/// included) or twice the model duration has elapsed.
Rollout rollout(const TrainedModel& model, double rate);

// Model bundle: a directory holding `weights.txt` (weight file format) and
// `model.meta` (key=value lines: name, n, duration, rate, time_offset,
// time_scale, periodic).
inline constexpr const char* kWeightsFile = "weights.txt";
inline constexpr const char* kMetadataFile = "model.meta";

void write_metadata(std::ostream& out, const TrainedModel& model);
void save_model(const std::filesystem::path& dir, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& dir);

/// CSV `epoch,phase,lr,mse,mae`.
void write_training_log(std::ostream& out, const TrainingLog& log);
TrainingLog read_training_log(std::istream& in);

/// CSV `time,<joint names...>,end_flag` of a rollout.
void write_rollout_csv(std::ostream& out, const Rollout& rollout, const std::vector<std::string>& joint_names);

}  // namespace mimic
