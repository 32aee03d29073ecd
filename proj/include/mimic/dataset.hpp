#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimic/motion.hpp"

namespace mimic {

inline constexpr double kDefaultSampleRate = 50.0;
inline constexpr std::size_t kDefaultTailSamples = 10;

/// Maps absolute sample times onto the network input range [0, 1].
struct TimeNormalization {
  double offset = 0.0;
  double scale = 1.0;

  double apply(double t) const noexcept { return (t - offset) / scale; }
};

/// Uniformly sampled joint targets plus the end-of-motion flag.
///
/// `targets` holds one column per sample: rows 0..dof-1 are joint angles in
/// radians, the last row is the end flag (0 before the motion ends, 1 from the
/// end sample on). Periodic datasets keep the flag at 0 throughout.
struct MotionDataset {
  std::vector<double> sample_times;
  Eigen::MatrixXd targets;
  double sample_rate = kDefaultSampleRate;
  TimeNormalization normalization;
  bool periodic = false;
  std::vector<std::string> joint_names;

  std::size_t size() const noexcept { return sample_times.size(); }
  std::size_t dof() const noexcept { return targets.rows() > 0 ? static_cast<std::size_t>(targets.rows()) - 1 : 0; }

  /// 1 x size() matrix of normalized times.
  Eigen::MatrixXd inputs() const;
  double end_flag(std::size_t sample) const { return targets(targets.rows() - 1, static_cast<Eigen::Index>(sample)); }
  /// First sample whose flag is set; empty for periodic data.
  std::optional<std::size_t> end_index() const;

  /// Throws ValidationError when an invariant is broken: uniform spacing
  /// within 1e-9 s, flags 0 then 1, normalized inputs within [0, 1].
  void validate() const;
};

/// "j1".."jn".
std::vector<std::string> default_joint_names(std::size_t dof);

struct SamplingOptions {
  std::size_t tail_samples = kDefaultTailSamples;
};

/// Samples the movement's reference pose every 1/rate seconds from 0 through
/// the end of playback, then appends `tail_samples` copies of the final pose.
/// When the duration is not a whole number of periods the end sample is the
/// first grid point past it and holds the final pose.
MotionDataset sample_movement(const KeyframeMovement& movement, double rate, const SamplingOptions& options = {});

struct LogRecord {
  double time;
  std::vector<double> joints;
};

struct IngestOptions {
  bool periodic = false;
  std::size_t tail_samples = 0;
  /// Allowed offset of a record from its grid slot, as a fraction of the period.
  double jitter_tolerance = 0.25;
  std::vector<std::string> joint_names;
};

/// Regularizes an externally captured log onto the uniform grid starting at
/// the first record. A single missing sample is rebuilt by linear
/// interpolation; longer gaps throw IngestError, unsorted or duplicate
/// timestamps throw ParseError.
MotionDataset ingest_log(std::span<const LogRecord> records, double rate, const IngestOptions& options = {});

struct LogTable {
  std::vector<std::string> joint_names;
  std::vector<LogRecord> records;
};

/// CSV with header `time,<joint names...>`.
LogTable read_log_csv(std::istream& in);
LogTable load_log_csv(const std::filesystem::path& path);

// Dataset CSV: header `time,<joint names...>,end_flag`, one row per sample.
// Rate, normalization and periodicity are recovered from the rows; pass
// `rate` to override the derived sample rate.
void write_dataset_csv(std::ostream& out, const MotionDataset& dataset);
MotionDataset read_dataset_csv(std::istream& in, std::optional<double> rate = std::nullopt);
void save_dataset(const std::filesystem::path& path, const MotionDataset& dataset);
MotionDataset load_dataset(const std::filesystem::path& path, std::optional<double> rate = std::nullopt);

}  // namespace mimic
