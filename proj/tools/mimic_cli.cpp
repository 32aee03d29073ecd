// mimic: keyframe motion imitation pipeline.
//
//   gen       sample a keyframe movement file into a dataset CSV
//   ingest    regularize a captured joint log into a dataset CSV
//   train     fit a network to a dataset, write the model bundle and log
//   eval      metrics of a model on a dataset
//   rollout   inference-only playback until the end flag fires
//   simulate  drive the speed-controlled joint plant from a model or movement
//   compare   eval + rollout + plant comparison in one go
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mimic/dataset.hpp"
#include "mimic/error.hpp"
#include "mimic/motion.hpp"
#include "mimic/network.hpp"
#include "mimic/optimizer.hpp"
#include "mimic/plant.hpp"
#include "mimic/text_io.hpp"
#include "mimic/trainer.hpp"

namespace fs = std::filesystem;
using namespace mimic;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
  std::string movement;
  std::string dataset;
  std::string log;
  std::string model;
  std::string out;
  std::optional<double> rate;
  std::optional<std::string> arch;
  std::string schedule = "desk";
  std::uint64_t seed = 0;
  bool no_phase_reset = false;
  std::optional<double> early_stop_mae;
  std::string name = "motion";
  std::size_t tail = kDefaultTailSamples;
  std::optional<std::size_t> ingest_tail;
  bool periodic = false;
  double kp = kDefaultKp;
  double max_speed = kDefaultMaxSpeed;
  double tick_rate = kDefaultTickRate;
  bool self_test = false;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("mimic");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("MIMIC_LOG");
  spdlog::set_level(level && std::string(level) == "debug" ? spdlog::level::debug : spdlog::level::info);
}

template <typename Stream>
Stream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  Stream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void require_input(const std::string& path, const char* flag) {
  if (path.empty()) throw ValidationError(std::string(flag) + " is required");
  if (!fs::exists(path)) throw ValidationError(std::string(flag) + " file does not exist: " + path);
}

void require_output(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ValidationError("--out is required");
}

PlantConfig plant_config(const RunConfig& cfg, std::size_t dof) {
  PlantConfig plant = PlantConfig::uniform(dof, cfg.kp, cfg.max_speed, cfg.tick_rate);
  plant.validate();
  return plant;
}

void print_tracking(const TrackingReport& report, const std::vector<std::string>& names) {
  std::cout << "tracking_rms: " << text::format_double(report.overall_rms) << '\n';
  std::string attenuated;
  for (std::size_t j = 0; j < report.attenuated.size(); ++j) {
    if (report.attenuated[j]) attenuated += (attenuated.empty() ? "" : ",") + names[j];
  }
  std::cout << "attenuated: " << (attenuated.empty() ? "no" : "yes (" + attenuated + ")") << '\n';
}

void write_metrics(std::ostream& out, const EvaluationReport& report, const std::vector<std::string>& names) {
  out << "mse=" << text::format_double(report.mse) << '\n' << "mae=" << text::format_double(report.mae) << '\n';
  for (std::size_t j = 0; j < report.per_joint_mae.size(); ++j) {
    out << "mae_" << names[j] << '=' << text::format_double(report.per_joint_mae[j]) << '\n';
  }
  out << "end_time_error=" << report.end_time_error << '\n';
}

void print_evaluation(const EvaluationReport& report) {
  std::cout << "mse: " << text::format_double(report.mse) << '\n'
            << "mae: " << text::format_double(report.mae) << '\n'
            << "end_time_error: " << report.end_time_error << '\n';
}

std::vector<std::string> names_for(const MotionDataset& dataset) {
  return dataset.joint_names.empty() ? default_joint_names(dataset.dof()) : dataset.joint_names;
}

int cmd_gen(const RunConfig& cfg) {
  require_input(cfg.movement, "--movement");
  require_output(cfg);
  const KeyframeMovement movement = load_movement(cfg.movement);
  const ValidationReport report = validate_movement(movement);
  if (!report.ok()) {
    for (const Violation& v : report.violations) spdlog::error("{}: {}", v.rule, v.message);
    throw ValidationError(report.summary());
  }
  const MotionDataset data = sample_movement(movement, cfg.rate.value_or(kDefaultSampleRate), {cfg.tail});
  auto out = open_output<std::ofstream>(cfg.out);
  write_dataset_csv(out, data);
  std::cout << "samples: " << data.size() << '\n';
  return 0;
}

int cmd_ingest(const RunConfig& cfg) {
  require_input(cfg.log, "--log");
  require_output(cfg);
  const LogTable table = load_log_csv(cfg.log);
  IngestOptions options;
  options.periodic = cfg.periodic;
  options.tail_samples = cfg.ingest_tail.value_or(0);
  options.joint_names = table.joint_names;
  const MotionDataset data = ingest_log(table.records, cfg.rate.value_or(kDefaultSampleRate), options);
  auto out = open_output<std::ofstream>(cfg.out);
  write_dataset_csv(out, data);
  std::cout << "samples: " << data.size() << '\n' << "periodic: " << (data.periodic ? "true" : "false") << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  require_input(cfg.dataset, "--dataset");
  require_output(cfg);
  const MotionDataset data = load_dataset(cfg.dataset, cfg.rate);
  const Architecture arch = cfg.arch ? Architecture::parse(*cfg.arch) : Architecture::with_outputs(data.dof() + 1);
  TrainingSchedule schedule =
      fs::exists(cfg.schedule) ? load_schedule(cfg.schedule) : schedule_preset(cfg.schedule);
  if (cfg.no_phase_reset) schedule.reset_on_phase = false;

  TrainOptions options;
  options.seed = cfg.seed;
  options.name = cfg.name;
  options.early_stop_mae = cfg.early_stop_mae;
  options.on_epoch = [](const EpochRecord& r) {
    if (r.epoch % 1000 == 0) spdlog::debug("epoch {} phase {} lr {} mse {:.6g} mae {:.6g}", r.epoch, r.phase, r.learning_rate, r.mse, r.mae);
  };
  spdlog::info("training {} on {} samples, {} epochs", arch.to_string(), data.size(), schedule.total_epochs());
  const TrainResult result = train(data, arch, schedule, options);

  save_model(cfg.out, result.model);
  auto log_out = open_output<std::ofstream>(fs::path(cfg.out) / "training_log.csv");
  write_training_log(log_out, result.log);

  const EvaluationReport report = evaluate(result.model, data);
  print_evaluation(report);
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  require_input(cfg.model, "--model");
  require_input(cfg.dataset, "--dataset");
  const TrainedModel model = load_model(cfg.model);
  const MotionDataset data = load_dataset(cfg.dataset, cfg.rate);
  const EvaluationReport report = evaluate(model, data);
  print_evaluation(report);
  if (!cfg.out.empty()) {
    auto out = open_output<std::ofstream>(cfg.out);
    write_metrics(out, report, names_for(data));
  }
  return 0;
}

int cmd_rollout(const RunConfig& cfg) {
  require_input(cfg.model, "--model");
  require_output(cfg);
  const TrainedModel model = load_model(cfg.model);
  const Rollout trajectory = rollout(model, cfg.rate.value_or(model.metadata.sample_rate));
  auto out = open_output<std::ofstream>(cfg.out);
  write_rollout_csv(out, trajectory, default_joint_names(model.metadata.dof));
  std::cout << "samples: " << trajectory.size() << '\n'
            << "end_detected: " << (trajectory.end_detected ? "true" : "no-end-detected") << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  require_output(cfg);
  SimulationResult result;
  std::size_t dof = 0;
  if (!cfg.model.empty()) {
    require_input(cfg.model, "--model");
    const TrainedModel model = load_model(cfg.model);
    dof = model.metadata.dof;
    const Eigen::VectorXd first = model.predict(model.normalization.offset);
    PlantState initial{std::vector<double>(first.data(), first.data() + dof), 0.0};
    result = simulate(model, plant_config(cfg, dof), initial);
  } else {
    require_input(cfg.movement, "--movement");
    const KeyframeMovement movement = load_movement(cfg.movement);
    require_valid(movement);
    dof = movement.dof();
    result = simulate(movement, plant_config(cfg, dof), PlantState{movement.steps.front().keyframe, 0.0});
  }
  auto out = open_output<std::ofstream>(cfg.out);
  write_comparison_csv(out, result, default_joint_names(dof));
  std::cout << "ticks: " << result.desired.times.size() << '\n';
  print_tracking(result.report, default_joint_names(dof));
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  require_input(cfg.dataset, "--dataset");
  require_output(cfg);
  const MotionDataset data = load_dataset(cfg.dataset, cfg.rate);
  const std::vector<std::string> names = names_for(data);
  const std::size_t n = data.dof();
  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  EvaluationReport report;
  Rollout trajectory;
  if (cfg.self_test) {
    // The dataset is replayed as if it were the model's output.
    report = evaluate_predictions(data.targets, data);
    const std::size_t length = data.end_index() ? *data.end_index() + 1 : data.size();
    trajectory.times.assign(data.sample_times.begin(), data.sample_times.begin() + static_cast<long>(length));
    trajectory.outputs = data.targets.leftCols(static_cast<Eigen::Index>(length));
    trajectory.end_detected = data.end_index().has_value();
  } else {
    require_input(cfg.model, "--model");
    const TrainedModel model = load_model(cfg.model);
    report = evaluate(model, data);
    trajectory = rollout(model, data.sample_rate);
  }

  const PlantConfig plant = plant_config(cfg, n);
  const double duration = static_cast<double>(trajectory.size() - 1) / data.sample_rate;
  auto reference = [&](double t) {
    // Sample-and-hold of the rollout at the plant tick.
    auto k = static_cast<Eigen::Index>(std::floor(t * data.sample_rate + 1e-9));
    k = std::min<Eigen::Index>(k, trajectory.outputs.cols() - 1);
    std::vector<double> ref(n);
    for (std::size_t j = 0; j < n; ++j) ref[j] = trajectory.outputs(static_cast<Eigen::Index>(j), k);
    return ref;
  };
  const SimulationResult sim = simulate(reference, duration, plant, PlantState{reference(0.0), 0.0});

  {
    auto out = open_output<std::ofstream>(dir / "metrics.txt");
    write_metrics(out, report, names);
    out << "tracking_rms=" << text::format_double(sim.report.overall_rms) << '\n'
        << "attenuated=" << (sim.report.any_attenuated() ? "true" : "false") << '\n';
  }
  {
    auto out = open_output<std::ofstream>(dir / "rollout.csv");
    write_rollout_csv(out, trajectory, names);
  }
  {
    auto out = open_output<std::ofstream>(dir / "comparison.csv");
    write_comparison_csv(out, sim, names);
  }
  print_evaluation(report);
  print_tracking(sim.report, names);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Keyframe motion imitation: sample, train, evaluate and simulate"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_rate = [&](CLI::App* sub) { sub->add_option("--rate", cfg.rate, "Sample rate in Hz"); };
  auto add_out = [&](CLI::App* sub, const char* what) { sub->add_option("--out", cfg.out, what); };
  auto add_plant = [&](CLI::App* sub) {
    sub->add_option("--kp", cfg.kp, "Proportional gain, 1/s")->capture_default_str();
    sub->add_option("--max-speed", cfg.max_speed, "Joint speed limit, rad/s")->capture_default_str();
    sub->add_option("--tick-rate", cfg.tick_rate, "Plant control rate, Hz")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "Sample a keyframe movement into a dataset CSV");
  gen->add_option("--movement", cfg.movement, "Keyframe movement file");
  gen->add_option("--tail", cfg.tail, "Samples appended after the motion end")->capture_default_str();
  add_rate(gen);
  add_out(gen, "Dataset CSV to write");

  auto* ingest = app.add_subcommand("ingest", "Regularize a captured joint log (CSV time,<joints...>)");
  ingest->add_option("--log", cfg.log, "Captured log CSV");
  ingest->add_flag("--periodic", cfg.periodic, "Log covers one period of a cyclic motion");
  ingest->add_option("--tail", cfg.ingest_tail, "Samples appended after the motion end (default 0)");
  add_rate(ingest);
  add_out(ingest, "Dataset CSV to write");

  auto* trn = app.add_subcommand("train", "Train a network on a dataset");
  trn->add_option("--dataset", cfg.dataset, "Dataset CSV");
  trn->add_option("--arch", cfg.arch, "Layer sizes, e.g. 1:75:50:23 (default 1:75:50:<n+1>)");
  trn->add_option("--schedule", cfg.schedule, "Preset (desk, reference) or schedule file")->capture_default_str();
  trn->add_option("--seed", cfg.seed, "Initialization seed")->capture_default_str();
  trn->add_flag("--no-phase-reset", cfg.no_phase_reset, "Keep Adam moments across phases");
  trn->add_option("--early-stop-mae", cfg.early_stop_mae, "Stop once joint MAE reaches this value");
  trn->add_option("--name", cfg.name, "Motion name stored in the model metadata");
  add_rate(trn);
  add_out(trn, "Model bundle directory");

  auto* ev = app.add_subcommand("eval", "Evaluate a model on a dataset");
  ev->add_option("--model", cfg.model, "Model bundle directory");
  ev->add_option("--dataset", cfg.dataset, "Dataset CSV");
  add_rate(ev);
  add_out(ev, "Optional metrics file (key=value)");

  auto* ro = app.add_subcommand("rollout", "Play a model until its end flag fires");
  ro->add_option("--model", cfg.model, "Model bundle directory");
  add_rate(ro);
  add_out(ro, "Trajectory CSV to write");

  auto* sim = app.add_subcommand("simulate", "Track a model or movement with the joint plant");
  sim->add_option("--model", cfg.model, "Model bundle directory");
  sim->add_option("--movement", cfg.movement, "Keyframe movement file");
  add_plant(sim);
  add_out(sim, "Desired/attained comparison CSV");

  auto* cmp = app.add_subcommand("compare", "Metrics, rollout and plant comparison for a model and dataset");
  cmp->add_option("--model", cfg.model, "Model bundle directory");
  cmp->add_option("--dataset", cfg.dataset, "Dataset CSV");
  cmp->add_flag("--self-test", cfg.self_test, "Replay the dataset as the model output");
  add_rate(cmp);
  add_plant(cmp);
  add_out(cmp, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*gen) return cmd_gen(cfg);
    if (*ingest) return cmd_ingest(cfg);
    if (*trn) return cmd_train(cfg);
    if (*ev) return cmd_eval(cfg);
    if (*ro) return cmd_rollout(cfg);
    if (*sim) return cmd_simulate(cfg);
    if (*cmp) return cmd_compare(cfg);
  } catch (const DivergenceError& e) {
    spdlog::error("{} (last finite epoch: {})", e.what(), e.last_finite_epoch());
    return kExitNumeric;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
