#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mimic {

struct Knot {
  double time;
  double value;
};

/// Polynomial a + b*x + c*x^2 + d*x^3 in the offset x from the segment start.
struct SplineSegment {
  double a;
  double b;
  double c;
  double d;
};

struct SplineDerivatives {
  double velocity;
  double acceleration;
};

/// Natural cubic spline (zero second derivative at both ends) through a set of knots.
///
/// The spline is C2 across interior knots and reproduces every knot value.
/// Queries outside [first knot, last knot] throw OutOfRangeError; there is no
/// extrapolation. Immutable after construction.
class CubicSpline {
 public:
  /// Throws ValidationError for fewer than two knots, non-increasing times or
  /// non-finite input.
  explicit CubicSpline(std::span<const Knot> knots);

  double eval(double t) const;
  SplineDerivatives eval_derivatives(double t) const;

  std::span<const double> knot_times() const noexcept { return times_; }
  std::span<const SplineSegment> segments() const noexcept { return segments_; }

  double start_time() const noexcept { return times_.front(); }
  double end_time() const noexcept { return times_.back(); }

  /// Index of the segment that owns `t`; interior knots belong to the segment they start.
  std::size_t segment_index(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<SplineSegment> segments_;
};

}  // namespace mimic
