#include "mimic/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mimic/error.hpp"

namespace mimic {

namespace {

// Second derivatives at every knot of the natural spline. Interior rows of
//   h[i-1] M[i-1] + 2 (h[i-1] + h[i]) M[i] + h[i] M[i+1] = 6 (slope[i] - slope[i-1])
// form a strictly diagonally dominant tridiagonal system, so the Thomas
// algorithm runs without pivoting.
std::vector<double> natural_second_derivatives(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> moments(n, 0.0);
  if (n < 3) return moments;

  const std::size_t interior = n - 2;
  std::vector<double> lower(interior), diag(interior), upper(interior), rhs(interior);
  for (std::size_t k = 0; k < interior; ++k) {
    const std::size_t i = k + 1;
    const double h_prev = t[i] - t[i - 1];
    const double h_next = t[i + 1] - t[i];
    lower[k] = h_prev;
    diag[k] = 2.0 * (h_prev + h_next);
    upper[k] = h_next;
    rhs[k] = 6.0 * ((y[i + 1] - y[i]) / h_next - (y[i] - y[i - 1]) / h_prev);
  }

  for (std::size_t k = 1; k < interior; ++k) {
    const double w = lower[k] / diag[k - 1];
    diag[k] -= w * upper[k - 1];
    rhs[k] -= w * rhs[k - 1];
  }
  moments[interior] = rhs[interior - 1] / diag[interior - 1];
  for (std::size_t k = interior - 1; k-- > 0;) {
    moments[k + 1] = (rhs[k] - upper[k] * moments[k + 2]) / diag[k];
  }
  return moments;
}

}  // namespace

CubicSpline::CubicSpline(std::span<const Knot> knots) {
  if (knots.size() < 2) {
    throw ValidationError("spline needs at least 2 knots, got " + std::to_string(knots.size()));
  }
  times_.reserve(knots.size());
  values_.reserve(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const Knot& k = knots[i];
    if (!std::isfinite(k.time) || !std::isfinite(k.value)) {
      throw ValidationError("spline knot " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(k.time > knots[i - 1].time)) {
      throw ValidationError("spline knot times must be strictly increasing (knot " + std::to_string(i) + ")");
    }
    times_.push_back(k.time);
    values_.push_back(k.value);
  }

  const std::vector<double> m = natural_second_derivatives(times_, values_);
  segments_.reserve(times_.size() - 1);
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    const double h = times_[i + 1] - times_[i];
    const double slope = (values_[i + 1] - values_[i]) / h;
    segments_.push_back({
        values_[i],
        slope - h * (2.0 * m[i] + m[i + 1]) / 6.0,
        m[i] / 2.0,
        (m[i + 1] - m[i]) / (6.0 * h),
    });
  }
}

std::size_t CubicSpline::segment_index(double t) const {
  if (!(t >= times_.front() && t <= times_.back())) {
    throw OutOfRangeError("spline query t=" + std::to_string(t) + " outside [" + std::to_string(times_.front()) +
                          ", " + std::to_string(times_.back()) + "]");
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(times_.begin(), it));
  return std::min(idx == 0 ? 0 : idx - 1, segments_.size() - 1);
}

double CubicSpline::eval(double t) const {
  const std::size_t i = segment_index(t);
  if (t == times_.back()) return values_.back();
  const SplineSegment& s = segments_[i];
  const double dt = t - times_[i];
  return s.a + dt * (s.b + dt * (s.c + dt * s.d));
}

SplineDerivatives CubicSpline::eval_derivatives(double t) const {
  const std::size_t i = segment_index(t);
  const SplineSegment& s = segments_[i];
  const double dt = t - times_[i];
  return {s.b + dt * (2.0 * s.c + 3.0 * dt * s.d), 2.0 * s.c + 6.0 * s.d * dt};
}

}  // namespace mimic
