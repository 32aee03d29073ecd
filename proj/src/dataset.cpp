#include "mimic/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mimic/error.hpp"
#include "mimic/text_io.hpp"

namespace mimic {

namespace {

constexpr double kSpacingTolerance = 1e-9;

void require_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("rate must be positive");
}

TimeNormalization span_normalization(const std::vector<double>& times) {
  const double span = times.back() - times.front();
  return {times.front(), span > 0.0 ? span : 1.0};
}

}  // namespace

Eigen::MatrixXd MotionDataset::inputs() const {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) x(0, static_cast<Eigen::Index>(i)) = normalization.apply(sample_times[i]);
  return x;
}

std::optional<std::size_t> MotionDataset::end_index() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (end_flag(i) >= 0.5) return i;
  }
  return std::nullopt;
}

void MotionDataset::validate() const {
  if (size() == 0) throw ValidationError("dataset is empty");
  if (targets.cols() != static_cast<Eigen::Index>(size()) || targets.rows() < 2) {
    throw ValidationError("dataset targets must be (dof + 1) x samples");
  }
  if (!joint_names.empty() && joint_names.size() != dof()) throw ValidationError("joint name count differs from dof");
  if (!targets.allFinite()) throw ValidationError("dataset contains non-finite targets");
  if (!(sample_rate > 0.0)) throw ValidationError("dataset sample rate must be positive");
  if (!(normalization.scale > 0.0) || !std::isfinite(normalization.offset)) {
    throw ValidationError("dataset normalization must have finite offset and positive scale");
  }
  const double period = 1.0 / sample_rate;
  bool ended = false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (i > 0 && std::abs(sample_times[i] - sample_times[i - 1] - period) > kSpacingTolerance) {
      throw ValidationError("sample " + std::to_string(i) + " breaks the uniform " + text::format_double(period) +
                            " s spacing");
    }
    const double flag = end_flag(i);
    if (flag != 0.0 && flag != 1.0) throw ValidationError("end flag must be 0 or 1 (sample " + std::to_string(i) + ")");
    if (ended && flag == 0.0) throw ValidationError("end flag drops back to 0 at sample " + std::to_string(i));
    ended = ended || flag == 1.0;
    const double x = normalization.apply(sample_times[i]);
    if (x < -kSpacingTolerance || x > 1.0 + kSpacingTolerance) {
      throw ValidationError("normalized time of sample " + std::to_string(i) + " leaves [0, 1]");
    }
  }
  if (periodic && ended) throw ValidationError("periodic dataset must keep the end flag at 0");
}

std::vector<std::string> default_joint_names(std::size_t dof) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < dof; ++j) names.push_back("j" + std::to_string(j + 1));
  return names;
}

MotionDataset sample_movement(const KeyframeMovement& movement, double rate, const SamplingOptions& options) {
  require_rate(rate);
  const MovementPlayer player(movement);
  const double duration = player.duration();
  const std::size_t n = player.dof();

  // Index of the end sample: first grid point at or past the duration.
  const auto end_index = static_cast<std::size_t>(std::ceil(duration * rate - kSpacingTolerance));
  const std::size_t count = end_index + 1 + options.tail_samples;

  MotionDataset data;
  data.sample_rate = rate;
  data.joint_names = default_joint_names(n);
  data.sample_times.resize(count);
  data.targets.resize(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(count));
  const Keyframe last = player.pose(duration);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / rate;
    data.sample_times[k] = t;
    const Keyframe pose = k < end_index ? player.pose(t) : last;
    const auto col = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < n; ++j) data.targets(static_cast<Eigen::Index>(j), col) = pose[j];
    data.targets(static_cast<Eigen::Index>(n), col) = k < end_index ? 0.0 : 1.0;
  }
  data.normalization = span_normalization(data.sample_times);
  return data;
}

MotionDataset ingest_log(std::span<const LogRecord> records, double rate, const IngestOptions& options) {
  require_rate(rate);
  if (records.empty()) throw IngestError("log has no records");
  const std::size_t n = records.front().joints.size();
  if (n == 0) throw IngestError("log records carry no joints");
  if (!options.joint_names.empty() && options.joint_names.size() != n) {
    throw ShapeError("log has " + std::to_string(n) + " joints but " + std::to_string(options.joint_names.size()) +
                     " names");
  }

  const double t0 = records.front().time;
  std::vector<long> slots;
  slots.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const LogRecord& r = records[i];
    if (!std::isfinite(r.time)) throw ParseError(i + 1, "log record time is not finite");
    if (r.joints.size() != n) {
      throw ShapeError("log record " + std::to_string(i + 1) + " has " + std::to_string(r.joints.size()) +
                       " joints, expected " + std::to_string(n));
    }
    if (i > 0 && !(r.time > records[i - 1].time)) {
      throw ParseError(i + 1, "log records are not sorted by strictly increasing time");
    }
    const double position = (r.time - t0) * rate;
    const long slot = std::lround(position);
    if (std::abs(position - static_cast<double>(slot)) > options.jitter_tolerance) {
      throw IngestError("record at t=" + text::format_double(r.time) + " is off the " + text::format_double(rate) +
                        " Hz grid");
    }
    if (i > 0) {
      const long step = slot - slots.back();
      if (step == 0) throw ParseError(i + 1, "two records fall into the same sample slot");
      if (step > 2) {
        throw IngestError("gap of " + std::to_string(step - 1) + " missing samples between t=" +
                          text::format_double(records[i - 1].time) + " and t=" + text::format_double(r.time));
      }
    }
    slots.push_back(slot);
  }

  const std::size_t motion_samples = static_cast<std::size_t>(slots.back()) + 1;
  const std::size_t tail = options.periodic ? 0 : options.tail_samples;
  const std::size_t count = motion_samples + tail;

  MotionDataset data;
  data.sample_rate = rate;
  data.periodic = options.periodic;
  data.joint_names = options.joint_names.empty() ? default_joint_names(n) : options.joint_names;
  data.sample_times.resize(count);
  data.targets = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(count));

  auto put = [&](std::size_t k, auto&& joint_value) {
    for (std::size_t j = 0; j < n; ++j) data.targets(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = joint_value(j);
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto k = static_cast<std::size_t>(slots[i]);
    // Identity for on-grid logs; snaps jittered records onto the grid.
    data.sample_times[k] = i == 0 ? t0 : t0 + static_cast<double>(k) / rate;
    put(k, [&](std::size_t j) { return records[i].joints[j]; });
    if (i > 0 && slots[i] - slots[i - 1] == 2) {
      const std::size_t missing = k - 1;
      const LogRecord& a = records[i - 1];
      const LogRecord& b = records[i];
      const double t = t0 + static_cast<double>(missing) / rate;
      const double w = (t - a.time) / (b.time - a.time);
      data.sample_times[missing] = t;
      put(missing, [&](std::size_t j) { return a.joints[j] + w * (b.joints[j] - a.joints[j]); });
    }
  }
  // Keep recorded timestamps when the log is already on the grid.
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto k = static_cast<std::size_t>(slots[i]);
    if (std::abs(records[i].time - data.sample_times[k]) <= kSpacingTolerance) data.sample_times[k] = records[i].time;
  }

  const std::size_t last_record = motion_samples - 1;
  for (std::size_t k = motion_samples; k < count; ++k) {
    data.sample_times[k] = t0 + static_cast<double>(k) / rate;
    put(k, [&](std::size_t j) { return data.targets(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(last_record)); });
  }
  if (!options.periodic) {
    for (std::size_t k = last_record; k < count; ++k) data.targets(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = 1.0;
  }
  data.normalization = span_normalization(data.sample_times);
  return data;
}

LogTable read_log_csv(std::istream& in) {
  std::string raw;
  if (!std::getline(in, raw)) throw ParseError(1, "empty log file");
  const auto header = text::split(text::trim_line(raw), ',');
  if (header.size() < 2 || header[0] != "time") throw ParseError(1, "log header must be 'time,<joint names...>'");
  LogTable table;
  for (std::size_t i = 1; i < header.size(); ++i) table.joint_names.emplace_back(header[i]);

  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim_line(raw);
    if (line.empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    LogRecord record{text::parse_double(fields[0], line_no), {}};
    for (std::size_t i = 1; i < fields.size(); ++i) record.joints.push_back(text::parse_double(fields[i], line_no));
    table.records.push_back(std::move(record));
  }
  return table;
}

LogTable load_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open log file " + path.string());
  return read_log_csv(in);
}

void write_dataset_csv(std::ostream& out, const MotionDataset& dataset) {
  const std::vector<std::string> names =
      dataset.joint_names.empty() ? default_joint_names(dataset.dof()) : dataset.joint_names;
  out << "time";
  for (const std::string& name : names) out << ',' << name;
  out << ",end_flag\n";
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    out << text::format_double(dataset.sample_times[k]);
    for (Eigen::Index r = 0; r < dataset.targets.rows(); ++r) {
      out << ',' << text::format_double(dataset.targets(r, static_cast<Eigen::Index>(k)));
    }
    out << '\n';
  }
}

MotionDataset read_dataset_csv(std::istream& in, std::optional<double> rate) {
  std::string raw;
  if (!std::getline(in, raw)) throw ParseError(1, "empty dataset file");
  const auto header = text::split(text::trim_line(raw), ',');
  if (header.size() < 3 || header.front() != "time" || header.back() != "end_flag") {
    throw ParseError(1, "dataset header must be 'time,<joint names...>,end_flag'");
  }
  MotionDataset data;
  for (std::size_t i = 1; i + 1 < header.size(); ++i) data.joint_names.emplace_back(header[i]);
  const std::size_t rows = header.size() - 1;

  std::vector<std::vector<double>> columns;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim_line(raw);
    if (line.empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    data.sample_times.push_back(text::parse_double(fields[0], line_no));
    std::vector<double> column;
    for (std::size_t i = 1; i < fields.size(); ++i) column.push_back(text::parse_double(fields[i], line_no));
    columns.push_back(std::move(column));
  }
  if (columns.empty()) throw ParseError(0, "dataset has no samples");

  data.targets.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    for (std::size_t r = 0; r < rows; ++r) data.targets(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = columns[k][r];
  }

  if (rate) {
    data.sample_rate = *rate;
  } else if (data.size() >= 2) {
    const double derived =
        static_cast<double>(data.size() - 1) / (data.sample_times.back() - data.sample_times.front());
    const double rounded = std::round(derived);
    data.sample_rate = std::abs(derived - rounded) <= 1e-6 * derived ? rounded : derived;
  } else {
    throw ParseError(0, "a single-sample dataset needs an explicit sample rate");
  }
  data.normalization = span_normalization(data.sample_times);
  data.periodic = !data.end_index().has_value();
  try {
    data.validate();
  } catch (const ValidationError& e) {
    throw ParseError(0, std::string("dataset file is inconsistent: ") + e.what());
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const MotionDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  write_dataset_csv(out, dataset);
}

MotionDataset load_dataset(const std::filesystem::path& path, std::optional<double> rate) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open dataset file " + path.string());
  return read_dataset_csv(in, rate);
}

}  // namespace mimic
