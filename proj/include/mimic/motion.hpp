#pragma once

// Keyframe movements: postures reached at given times, played back open-loop
// through per-joint natural cubic splines.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mimic/spline.hpp"

namespace mimic {

/// One angle per degree of freedom, radians.
using Keyframe = std::vector<double>;

struct KeyframeStep {
  Keyframe keyframe;
  double time = 0.0;  ///< seconds since movement start
};

struct KeyframeMovement {
  std::vector<KeyframeStep> steps;
  double speed_rate = 1.0;

  /// Dimension of the first keyframe, 0 for an empty movement.
  std::size_t dof() const noexcept { return steps.empty() ? 0 : steps.front().keyframe.size(); }
};

struct Violation {
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(const std::string& rule) const;
  /// All messages joined with "; ".
  std::string summary() const;
};

/// Rule identifiers reported by validate_movement.
namespace rules {
inline constexpr const char* kMinSteps = "min_steps";
inline constexpr const char* kFirstTimeZero = "first_time_zero";
inline constexpr const char* kTimeFinite = "time_finite";
inline constexpr const char* kTimesIncreasing = "times_increasing";
inline constexpr const char* kDimension = "dimension";
inline constexpr const char* kAngleFinite = "angle_finite";
inline constexpr const char* kSpeedRate = "speed_rate";
}  // namespace rules

/// Lists every violated movement invariant. Never throws.
ValidationReport validate_movement(const KeyframeMovement& movement);

/// Throws ValidationError carrying the report summary when the movement is invalid.
void require_valid(const KeyframeMovement& movement);

/// Wall-clock length of playback: last step time divided by the speed rate.
double playback_duration(const KeyframeMovement& movement);

/// Validated movement with one cached spline per joint.
class MovementPlayer {
 public:
  explicit MovementPlayer(KeyframeMovement movement);

  const KeyframeMovement& movement() const noexcept { return movement_; }
  std::size_t dof() const noexcept { return splines_.size(); }
  double duration() const noexcept { return duration_; }

  /// Joint references at playback time t in [0, duration()]; throws OutOfRangeError otherwise.
  Keyframe pose(double t) const;

 private:
  KeyframeMovement movement_;
  std::vector<CubicSpline> splines_;
  double duration_;
};

/// Convenience wrapper that builds a player for a single query.
Keyframe reference_pose(const KeyframeMovement& movement, double t);

// Text format:
//   movement n=<int> gamma=<int> rate=<float>
//   t=<float> <j1> ... <jn>        (gamma lines)
KeyframeMovement read_movement(std::istream& in);
void write_movement(std::ostream& out, const KeyframeMovement& movement);
KeyframeMovement load_movement(const std::filesystem::path& path);
void save_movement(const std::filesystem::path& path, const KeyframeMovement& movement);

}  // namespace mimic
