#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mimic/error.hpp"
#include "mimic/network.hpp"
#include "test_support.hpp"

namespace mimic {
namespace {

DenseLayer make_layer(Eigen::MatrixXd w, Eigen::VectorXd b, Activation act) {
  DenseLayer l;
  l.weights = std::move(w);
  l.biases = std::move(b);
  l.activation = act;
  return l;
}

TEST(LeakyRelu, Branches) {
  EXPECT_EQ(leaky_relu(2.0, 0.01), 2.0);
  EXPECT_DOUBLE_EQ(leaky_relu(-1.0, 0.01), -0.01);
  EXPECT_EQ(leaky_relu(0.0, 0.3), 0.0);
  EXPECT_EQ(leaky_relu_derivative(0.0, 0.01), 1.0);
  EXPECT_EQ(leaky_relu_derivative(-1e-300, 0.01), 0.01);
  EXPECT_EQ(leaky_relu_derivative(5.0, 0.01), 1.0);
}

TEST(Forward, ZeroNetworkGivesZero) {
  MimicNetwork net(1, {make_layer(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3), Activation::leaky_relu),
                       make_layer(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2), Activation::linear)});
  Eigen::VectorXd x(1);
  x << 0.7;
  EXPECT_TRUE(net.forward(x).isZero(0.0));
}

TEST(Forward, SingleAffineLayer) {
  MimicNetwork net(1, {make_layer(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 1.0),
                                  Activation::linear)});
  Eigen::VectorXd x(1);
  x << 3.0;
  EXPECT_EQ(net.forward(x)(0), 7.0);
}

TEST(Forward, ReferenceArchitectureMatchesNaiveLoops) {
  const MimicNetwork net = initialize(Architecture::reference(), 11, {.spread_input_kinks = true});
  Eigen::VectorXd x(1);
  x << 0.5;
  const Eigen::VectorXd y = net.forward(x);
  const std::vector<double> oracle = testing::naive_forward<double>(net, {0.5});
  ASSERT_EQ(static_cast<std::size_t>(y.size()), oracle.size());
  ASSERT_EQ(oracle.size(), 23u);
  for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(y(static_cast<Eigen::Index>(i)), oracle[i], 1e-12);
}

TEST(Forward, BatchMatchesColumnwise) {
  std::mt19937_64 rng(5);
  const MimicNetwork net = testing::random_network(rng, 2, {6, 4, 3});
  const Eigen::MatrixXd x = testing::random_matrix(rng, 2, 9);
  const Eigen::MatrixXd batch = net.forward_batch(x);
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    EXPECT_LT((batch.col(k) - net.forward(x.col(k))).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_EQ(net.forward_batch(x), batch);
}

TEST(Forward, RejectsWrongInputSize) {
  std::mt19937_64 rng(1);
  const MimicNetwork net = testing::random_network(rng, 2, {3, 1});
  EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(3)), ShapeError);
  EXPECT_THROW(net.forward_batch(Eigen::MatrixXd::Zero(1, 4)), ShapeError);
}

TEST(Network, RejectsBrokenChainingAndNonFiniteParameters) {
  EXPECT_THROW(MimicNetwork(1, {make_layer(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Activation::linear)}),
               ShapeError);
  EXPECT_THROW(MimicNetwork(1, {make_layer(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3), Activation::linear),
                                make_layer(Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2), Activation::linear)}),
               ShapeError);
  EXPECT_THROW(MimicNetwork(1, {make_layer(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(2), Activation::linear)}),
               ShapeError);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 1);
  w(0, 0) = NAN;
  EXPECT_THROW(MimicNetwork(1, {make_layer(w, Eigen::VectorXd::Zero(1), Activation::linear)}), ValidationError);
}

TEST(MseLoss, Examples) {
  Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(2, 1);
  Eigen::MatrixXd target(2, 1);
  target << 3.0, 4.0;
  EXPECT_EQ(mse_loss(pred, target), 12.5);
  EXPECT_EQ(mse_loss(target, target), 0.0);

  Eigen::MatrixXd p2 = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd t2(2, 2);
  t2 << 1.0, 2.0, 1.0, std::sqrt(2.0);
  EXPECT_NEAR(mse_loss(p2, t2), 2.0, 1e-15);
  EXPECT_THROW(mse_loss(p2, target), ShapeError);
}

TEST(MseLoss, NonNegativeAndZeroOnlyWhenEqual) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd a = testing::random_matrix(rng, 3, 5);
    Eigen::MatrixXd b = a;
    EXPECT_EQ(mse_loss(a, b), 0.0);
    b(trial % 3, trial % 5) += 1e-3;
    EXPECT_GT(mse_loss(a, b), 0.0);
  }
}

TEST(Backward, HandDifferentiatedLinearUnit) {
  MimicNetwork net(1, {make_layer(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1), Activation::linear)});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Zero(1, 1);
  const BackwardResult r = backward(net, x, y);
  EXPECT_EQ(r.loss, 2.0);
  EXPECT_EQ(r.gradients[0].weights(0, 0), 4.0);
  EXPECT_EQ(r.gradients[0].biases(0), 2.0);
}

TEST(Backward, ZeroNetworkZeroTargetsGivesZeroGradients) {
  MimicNetwork net(1, {make_layer(Eigen::MatrixXd::Zero(4, 1), Eigen::VectorXd::Zero(4), Activation::leaky_relu),
                       make_layer(Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(3), Activation::linear)});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 5, 0.3);
  const BackwardResult r = backward(net, x, Eigen::MatrixXd::Zero(3, 5));
  EXPECT_EQ(r.loss, 0.0);
  for (const LayerGradient& g : r.gradients) {
    EXPECT_TRUE(g.weights.isZero(0.0));
    EXPECT_TRUE(g.biases.isZero(0.0));
  }
}

TEST(Backward, RejectsMismatchedShapes) {
  std::mt19937_64 rng(2);
  const MimicNetwork net = testing::random_network(rng, 1, {3, 2});
  EXPECT_THROW(backward(net, Eigen::MatrixXd::Zero(1, 4), Eigen::MatrixXd::Zero(2, 3)), ShapeError);
  EXPECT_THROW(backward(net, Eigen::MatrixXd::Zero(1, 4), Eigen::MatrixXd::Zero(3, 4)), ShapeError);
}

std::vector<double> flatten(const GradientSet& grads) {
  std::vector<double> out;
  for (const LayerGradient& g : grads) {
    for (Eigen::Index r = 0; r < g.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weights.cols(); ++c) out.push_back(g.weights(r, c));
    }
    for (Eigen::Index r = 0; r < g.biases.size(); ++r) out.push_back(g.biases(r));
  }
  return out;
}

TEST(BackwardProperty, MatchesFiniteDifferencesOnRandomSmallNetworks) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> units(1, 10);
  std::uniform_int_distribution<std::size_t> depth(1, 3);
  std::uniform_int_distribution<Eigen::Index> batch(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::size_t> sizes(depth(rng));
    for (std::size_t& s : sizes) s = units(rng);
    const std::size_t in = units(rng) % 3 + 1;
    const MimicNetwork net = testing::random_network(rng, in, sizes);
    const Eigen::Index m = batch(rng);
    const Eigen::MatrixXd x = testing::random_matrix(rng, static_cast<Eigen::Index>(in), m);
    const Eigen::MatrixXd y = testing::random_matrix(rng, static_cast<Eigen::Index>(sizes.back()), m);

    const std::vector<double> analytic = flatten(backward(net, x, y).gradients);
    const std::vector<double> numeric = testing::finite_difference_gradient(net, x, y);
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, testing::relative_error(analytic[i], numeric[i]));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(BackwardProperty, ReferenceArchitectureFiveSampleBatch) {
  std::mt19937_64 rng(123);
  const MimicNetwork net = initialize(Architecture::reference(), 3, {.spread_input_kinks = true});
  Eigen::MatrixXd x(1, 5);
  x << 0.05, 0.3, 0.51, 0.77, 0.96;
  const Eigen::MatrixXd y = testing::random_matrix(rng, 23, 5);
  const std::vector<double> analytic = flatten(backward(net, x, y).gradients);
  const std::vector<double> numeric = testing::finite_difference_gradient(net, x, y);
  ASSERT_EQ(analytic.size(), 5123u);
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, testing::relative_error(analytic[i], numeric[i]));
  EXPECT_LT(worst, 1e-5);
}

TEST(ParamCount, ReferenceArchitecture) {
  const ParamCount c = param_count(Architecture::reference());
  EXPECT_EQ(c.per_layer, (std::vector<std::size_t>{150, 3800, 1173}));
  EXPECT_EQ(c.total, 5123u);
  EXPECT_EQ(param_count(initialize(Architecture::reference(), 0)).total, 5123u);
}

TEST(ArchitectureText, ParseAndPrint) {
  const Architecture a = Architecture::parse("1:75:50:23");
  EXPECT_EQ(a.input_dim, 1u);
  ASSERT_EQ(a.layers.size(), 3u);
  EXPECT_EQ(a.layers[0].activation, Activation::leaky_relu);
  EXPECT_EQ(a.layers[1].activation, Activation::leaky_relu);
  EXPECT_EQ(a.layers[2].activation, Activation::linear);
  EXPECT_EQ(a.to_string(), "1:75:50:23");
  EXPECT_EQ(Architecture::with_outputs(5).to_string(), "1:75:50:5");
  EXPECT_THROW(Architecture::parse("1:0:5"), ConfigError);
  EXPECT_THROW(Architecture::parse("1"), ConfigError);
  EXPECT_THROW(Architecture::parse("1:x:5"), ConfigError);
}

TEST(Initialize, DeterministicBoundedZeroBiases) {
  const Architecture arch = Architecture::reference();
  const MimicNetwork a = initialize(arch, 42);
  const MimicNetwork b = initialize(arch, 42);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == initialize(arch, 43));

  const double bound = std::sqrt(6.0 / 76.0);
  EXPECT_NEAR(bound, 0.2810, 5e-5);
  for (const DenseLayer& l : a.layers()) {
    const double lim = std::sqrt(6.0 / static_cast<double>(l.inputs() + l.outputs()));
    EXPECT_LE(l.weights.cwiseAbs().maxCoeff(), lim);
    EXPECT_TRUE(l.biases.isZero(0.0));
  }
  EXPECT_LE(a.layers()[0].weights.cwiseAbs().maxCoeff(), bound);
}

TEST(Initialize, KinkSpreadLeavesWeightsAlone) {
  const Architecture arch = Architecture::with_outputs(5);
  const MimicNetwork plain = initialize(arch, 9);
  const MimicNetwork spread = initialize(arch, 9, {.spread_input_kinks = true});
  for (std::size_t i = 0; i < plain.layers().size(); ++i) EXPECT_EQ(plain.layers()[i].weights, spread.layers()[i].weights);
  EXPECT_FALSE(spread.layers()[0].biases.isZero(0.0));
  EXPECT_TRUE(spread.layers()[1].biases.isZero(0.0));
  // Each kink -b/w lies inside the unit input range.
  const DenseLayer& first = spread.layers()[0];
  for (Eigen::Index r = 0; r < first.biases.size(); ++r) {
    if (first.weights(r, 0) == 0.0) continue;
    const double kink = -first.biases(r) / first.weights(r, 0);
    EXPECT_GE(kink, -1e-12);
    EXPECT_LE(kink, 1.0 + 1e-12);
  }
}

TEST(WeightFile, RoundTripsBitExactly) {
  std::mt19937_64 rng(17);
  const MimicNetwork net = testing::random_network(rng, 1, {7, 5, 4});
  std::ostringstream first;
  write_weights(first, net);
  std::istringstream in(first.str());
  const MimicNetwork back = read_weights(in);
  EXPECT_TRUE(back == net);
  std::ostringstream second;
  write_weights(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(WeightFile, HeaderLayout) {
  MimicNetwork net(1, {make_layer(Eigen::MatrixXd::Constant(2, 1, 0.5), Eigen::VectorXd::Constant(2, -1.0),
                                  Activation::leaky_relu),
                       make_layer(Eigen::MatrixXd::Constant(1, 2, 0.25), Eigen::VectorXd::Zero(1), Activation::linear)});
  std::ostringstream out;
  write_weights(out, net);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("mimicnet layers=2 input=1 alpha=0.01", 0), 0u);
  EXPECT_NE(text.find("layer out=2 in=1 act=leakyrelu"), std::string::npos);
  EXPECT_NE(text.find("layer out=1 in=2 act=linear"), std::string::npos);
}

TEST(WeightFile, MalformedInputsRaiseParseErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_weights(in);
  };
  EXPECT_THROW(parse("mimicnet layers=1 input=1\n"), ParseError);
  EXPECT_THROW(parse("mimicnet layers=1 input=1 alpha=0.01\nlayer out=1 in=1 act=tanh\n1\n0\n"), ParseError);
  EXPECT_THROW(parse("mimicnet layers=1 input=1 alpha=0.01\nlayer out=1 in=1 act=linear\n1 2\n0\n"), ParseError);
  EXPECT_THROW(parse("mimicnet layers=1 input=1 alpha=0.01\nlayer out=1 in=1 act=linear\n1\n"), ParseError);
  EXPECT_THROW(parse("mimicnet layers=1 input=2 alpha=0.01\nlayer out=1 in=1 act=linear\n1\n0\n"), ParseError);
  EXPECT_NO_THROW(parse("mimicnet layers=1 input=1 alpha=0.01\nlayer out=1 in=1 act=linear\n1\n0\n"));
}

}  // namespace
}  // namespace mimic
