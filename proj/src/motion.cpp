#include "mimic/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mimic/error.hpp"
#include "mimic/text_io.hpp"

namespace mimic {

bool ValidationReport::has(const std::string& rule) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const Violation& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

ValidationReport validate_movement(const KeyframeMovement& movement) {
  ValidationReport report;
  auto add = [&](const char* rule, std::string message) { report.violations.push_back({rule, std::move(message)}); };

  const auto& steps = movement.steps;
  if (steps.size() < 2) {
    add(rules::kMinSteps, "movement needs at least 2 keyframe steps, got " + std::to_string(steps.size()));
  }
  if (!(movement.speed_rate > 0.0) || !std::isfinite(movement.speed_rate)) {
    add(rules::kSpeedRate, "speed rate must be positive and finite");
  }
  if (steps.empty()) return report;

  if (steps.front().time != 0.0) add(rules::kFirstTimeZero, "first step time must be 0");

  const std::size_t n = steps.front().keyframe.size();
  if (n == 0) add(rules::kDimension, "keyframes must have at least one joint");

  for (std::size_t i = 0; i < steps.size(); ++i) {
    const KeyframeStep& s = steps[i];
    const std::string where = " (step " + std::to_string(i + 1) + ")";
    if (!std::isfinite(s.time) || s.time < 0.0) {
      add(rules::kTimeFinite, "step time must be finite and non-negative" + where);
    }
    if (i > 0 && !(s.time > steps[i - 1].time)) {
      add(rules::kTimesIncreasing, "times strictly increasing required" + where);
    }
    if (s.keyframe.size() != n) {
      add(rules::kDimension, "keyframe has " + std::to_string(s.keyframe.size()) + " joints, expected " +
                                 std::to_string(n) + where);
    }
    if (!std::all_of(s.keyframe.begin(), s.keyframe.end(), [](double a) { return std::isfinite(a); })) {
      add(rules::kAngleFinite, "joint angles must be finite" + where);
    }
  }
  return report;
}

void require_valid(const KeyframeMovement& movement) {
  const ValidationReport report = validate_movement(movement);
  if (!report.ok()) throw ValidationError("invalid movement: " + report.summary());
}

double playback_duration(const KeyframeMovement& movement) {
  require_valid(movement);
  return movement.steps.back().time / movement.speed_rate;
}

MovementPlayer::MovementPlayer(KeyframeMovement movement) : movement_(std::move(movement)) {
  duration_ = playback_duration(movement_);
  const std::size_t n = movement_.dof();
  splines_.reserve(n);
  std::vector<Knot> knots(movement_.steps.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < movement_.steps.size(); ++i) {
      knots[i] = {movement_.steps[i].time, movement_.steps[i].keyframe[j]};
    }
    splines_.emplace_back(knots);
  }
}

Keyframe MovementPlayer::pose(double t) const {
  if (!(t >= 0.0 && t <= duration_)) {
    throw OutOfRangeError("playback time " + text::format_double(t) + " outside [0, " +
                          text::format_double(duration_) + "]");
  }
  // t * rate can land one ulp past the last knot when t == duration.
  const double keyframe_time = std::min(t * movement_.speed_rate, movement_.steps.back().time);
  Keyframe pose(splines_.size());
  for (std::size_t j = 0; j < splines_.size(); ++j) pose[j] = splines_[j].eval(keyframe_time);
  return pose;
}

Keyframe reference_pose(const KeyframeMovement& movement, double t) { return MovementPlayer(movement).pose(t); }

KeyframeMovement read_movement(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, raw)) {
      ++line_no;
      if (!text::trim_line(raw).empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError(0, "empty movement file");
  const auto header = text::split(text::trim_line(raw), ' ');
  if (header.size() != 4 || header[0] != "movement") {
    throw ParseError(line_no, "expected 'movement n=<int> gamma=<int> rate=<float>'");
  }
  const long n = text::parse_long(text::expect_field(header[1], "n", line_no), line_no);
  const long gamma = text::parse_long(text::expect_field(header[2], "gamma", line_no), line_no);
  KeyframeMovement movement;
  movement.speed_rate = text::parse_double(text::expect_field(header[3], "rate", line_no), line_no);
  if (n <= 0) throw ParseError(line_no, "n must be positive");
  if (gamma < 0) throw ParseError(line_no, "gamma must be non-negative");

  for (long i = 0; i < gamma; ++i) {
    if (!next_line()) throw ParseError(line_no + 1, "expected " + std::to_string(gamma) + " keyframe steps, file ended");
    const auto fields = text::split(text::trim_line(raw), ' ');
    if (fields.size() != static_cast<std::size_t>(n) + 1) {
      throw ParseError(line_no, "expected t=<time> followed by " + std::to_string(n) + " joint values");
    }
    KeyframeStep step;
    step.time = text::parse_double(text::expect_field(fields[0], "t", line_no), line_no);
    step.keyframe.reserve(static_cast<std::size_t>(n));
    for (std::size_t j = 1; j < fields.size(); ++j) step.keyframe.push_back(text::parse_double(fields[j], line_no));
    movement.steps.push_back(std::move(step));
  }
  if (next_line()) throw ParseError(line_no, "unexpected content after the last keyframe step");
  return movement;
}

void write_movement(std::ostream& out, const KeyframeMovement& movement) {
  out << "movement n=" << movement.dof() << " gamma=" << movement.steps.size()
      << " rate=" << text::format_double(movement.speed_rate) << '\n';
  for (const KeyframeStep& s : movement.steps) {
    out << "t=" << text::format_double(s.time);
    for (double a : s.keyframe) out << ' ' << text::format_double(a);
    out << '\n';
  }
}

KeyframeMovement load_movement(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open movement file " + path.string());
  return read_movement(in);
}

void save_movement(const std::filesystem::path& path, const KeyframeMovement& movement) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write movement file " + path.string());
  write_movement(out, movement);
}

}  // namespace mimic
