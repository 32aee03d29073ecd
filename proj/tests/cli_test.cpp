#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "mimic/dataset.hpp"
#include "mimic/motion.hpp"
#include "mimic/text_io.hpp"
#include "mimic/trainer.hpp"
#include "test_support.hpp"

namespace mimic {
namespace {

struct CliResult {
  int code;
  std::string output;  // stdout and stderr
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(MIMIC_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

constexpr const char* kOneSecond = "movement n=2 gamma=3 rate=1\nt=0 0 0.2\nt=0.4 0.5 -0.1\nt=1 -0.3 0.6\n";

class Cli : public ::testing::Test {
 protected:
  testing::TempDir dir{"cli"};
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

TEST_F(Cli, GenWritesSampledDataset) {
  write_file(dir / "m.mov", kOneSecond);
  const CliResult r = run("gen --movement " + path("m.mov") + " --rate 50 --out " + path("d.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("samples: 61"), std::string::npos);
  EXPECT_EQ(line_count(dir / "d.csv"), 62u);
  EXPECT_EQ(load_dataset(dir / "d.csv").size(), 61u);
}

TEST_F(Cli, GenRejectsInvalidMovement) {
  write_file(dir / "bad.mov", "movement n=1 gamma=2 rate=1\nt=0.1 0\nt=1 1\n");
  const CliResult r = run("gen --movement " + path("bad.mov") + " --out " + path("d.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("first step time must be 0"), std::string::npos) << r.output;
}

TEST_F(Cli, GenRejectsZeroRate) {
  write_file(dir / "m.mov", kOneSecond);
  const CliResult r = run("gen --movement " + path("m.mov") + " --rate 0 --out " + path("d.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("rate must be positive"), std::string::npos) << r.output;
}

TEST_F(Cli, MissingInputsAndBadFlags) {
  EXPECT_EQ(run("gen --movement " + path("none.mov") + " --out " + path("d.csv")).code, 2);
  EXPECT_EQ(run("train --out " + path("m")).code, 2);
  EXPECT_EQ(run("gen --bogus 1").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, TrainIsDeterministicAndWritesBundle) {
  write_file(dir / "m.mov", kOneSecond);
  write_file(dir / "short.sched", "phase epochs=150 lr=0.001\nphase epochs=50 lr=0.0005\n");
  ASSERT_EQ(run("gen --movement " + path("m.mov") + " --out " + path("d.csv")).code, 0);
  const std::string common = "train --dataset " + path("d.csv") + " --arch 1:16:12:3 --schedule " + path("short.sched") +
                             " --seed 4 --out ";
  const CliResult a = run(common + path("a"));
  const CliResult b = run(common + path("b"));
  ASSERT_EQ(a.code, 0) << a.output;
  ASSERT_EQ(b.code, 0) << b.output;
  EXPECT_NE(a.output.find("mae: "), std::string::npos);
  EXPECT_EQ(slurp(dir / "a" / "weights.txt"), slurp(dir / "b" / "weights.txt"));
  EXPECT_EQ(slurp(dir / "a" / "training_log.csv"), slurp(dir / "b" / "training_log.csv"));
  EXPECT_EQ(line_count(dir / "a" / "training_log.csv"), 201u);
  EXPECT_NO_THROW(load_model(dir / "a"));
}

TEST_F(Cli, TrainShapeMismatchExitsTwo) {
  write_file(dir / "m.mov", kOneSecond);
  ASSERT_EQ(run("gen --movement " + path("m.mov") + " --out " + path("d.csv")).code, 0);
  const CliResult r = run("train --dataset " + path("d.csv") + " --arch 1:8:4 --out " + path("m"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("dof + 1"), std::string::npos) << r.output;
}

TEST_F(Cli, TrainDivergenceExitsThree) {
  write_file(dir / "m.mov", kOneSecond);
  write_file(dir / "wild.sched", "phase epochs=100 lr=1e300\n");
  ASSERT_EQ(run("gen --movement " + path("m.mov") + " --out " + path("d.csv")).code, 0);
  const CliResult r = run("train --dataset " + path("d.csv") + " --arch 1:8:6:3 --schedule " + path("wild.sched") +
                    " --out " + path("m"));
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("last finite epoch"), std::string::npos);
}

TEST_F(Cli, DeskTrainThenEvalRolloutSimulateCompare) {
  write_file(dir / "m.mov", kOneSecond);
  ASSERT_EQ(run("gen --movement " + path("m.mov") + " --out " + path("d.csv")).code, 0);
  const CliResult t = run("train --dataset " + path("d.csv") + " --out " + path("model"));
  ASSERT_EQ(t.code, 0) << t.output;

  const CliResult e = run("eval --model " + path("model") + " --dataset " + path("d.csv") + " --out " + path("metrics.txt"));
  ASSERT_EQ(e.code, 0) << e.output;
  const auto pos = e.output.find("mae: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(e.output.substr(pos + 5)), 0.018);
  EXPECT_NE(slurp(dir / "metrics.txt").find("mae_j2="), std::string::npos);

  const CliResult ro = run("rollout --model " + path("model") + " --out " + path("roll.csv"));
  ASSERT_EQ(ro.code, 0) << ro.output;
  EXPECT_NE(ro.output.find("end_detected: true"), std::string::npos);

  const CliResult s = run("simulate --model " + path("model") + " --out " + path("sim.csv"));
  ASSERT_EQ(s.code, 0) << s.output;
  EXPECT_NE(s.output.find("tracking_rms: "), std::string::npos);

  const CliResult c = run("compare --model " + path("model") + " --dataset " + path("d.csv") + " --out " + path("cmp"));
  ASSERT_EQ(c.code, 0) << c.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "cmp" / "metrics.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "cmp" / "rollout.csv"));
  EXPECT_EQ(slurp(dir / "cmp" / "comparison.csv").substr(0, 42), "time,j1_desired,j1_attained,j2_desired,j2_");
}

TEST_F(Cli, CompareSelfTestIsExact) {
  write_file(dir / "m.mov", kOneSecond);
  ASSERT_EQ(run("gen --movement " + path("m.mov") + " --out " + path("d.csv")).code, 0);
  const CliResult r = run("compare --self-test --dataset " + path("d.csv") + " --out " + path("cmp"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("mae: 0\n"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("end_time_error: 0\n"), std::string::npos);
}

TEST_F(Cli, CompareFlagsAttenuationOnSlowJoints) {
  // 1.2 rad swing in 0.2 s against a 1 rad/s limit.
  write_file(dir / "fast.mov", "movement n=1 gamma=4 rate=1\nt=0 0\nt=0.2 1.2\nt=0.4 -1.2\nt=0.6 0\n");
  ASSERT_EQ(run("gen --movement " + path("fast.mov") + " --out " + path("d.csv")).code, 0);
  const CliResult r = run("compare --self-test --dataset " + path("d.csv") + " --max-speed 1 --out " + path("cmp"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("attenuated: yes (j1)"), std::string::npos) << r.output;

  const CliResult fine = run("compare --self-test --dataset " + path("d.csv") + " --kp 50 --max-speed 50 --out " + path("cmp2"));
  EXPECT_NE(fine.output.find("attenuated: no"), std::string::npos) << fine.output;
}

TEST_F(Cli, SimulateMovementAndRejectUnstableGain) {
  write_file(dir / "m.mov", kOneSecond);
  const CliResult r = run("simulate --movement " + path("m.mov") + " --out " + path("sim.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("ticks: 51"), std::string::npos);
  EXPECT_EQ(run("simulate --movement " + path("m.mov") + " --kp 100 --out " + path("sim.csv")).code, 2);
}

TEST_F(Cli, IngestPeriodicLog) {
  std::ostringstream log;
  log << "time,hip,knee,ankle,roll\n";
  for (const LogRecord& rec : testing::smooth_periodic_log(0.8, 50.0, 2.0)) {
    log << text::format_double(rec.time);
    for (double v : rec.joints) log << ',' << text::format_double(v);
    log << '\n';
  }
  write_file(dir / "walk.csv", log.str());
  const CliResult r = run("ingest --log " + path("walk.csv") + " --periodic --out " + path("d.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("periodic: true"), std::string::npos);
  const MotionDataset d = load_dataset(dir / "d.csv");
  EXPECT_TRUE(d.periodic);
  EXPECT_EQ(d.joint_names.front(), "hip");
}

TEST_F(Cli, IngestGapExitsTwo) {
  write_file(dir / "gap.csv", "time,a\n0,0\n0.02,0.1\n0.08,0.2\n");
  const CliResult r = run("ingest --log " + path("gap.csv") + " --out " + path("d.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("gap of 2"), std::string::npos) << r.output;
}

}  // namespace
}  // namespace mimic
