#pragma once

// Dense feedforward regressor trained by hand-derived backpropagation.
//
// Batches are column-major: one sample per column. Inputs are input_dim x m,
// outputs and targets are output_dim x m.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mimic {

enum class Activation { leaky_relu, linear };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

inline constexpr double kDefaultLeakyAlpha = 0.01;

/// x for x >= 0, alpha * x otherwise.
inline double leaky_relu(double x, double alpha) noexcept { return x >= 0.0 ? x : alpha * x; }

/// Subgradient used by backprop; 1 at exactly zero.
inline double leaky_relu_derivative(double x, double alpha) noexcept { return x >= 0.0 ? 1.0 : alpha; }

struct DenseLayer {
  Eigen::MatrixXd weights;  ///< out x in
  Eigen::VectorXd biases;   ///< out
  Activation activation = Activation::linear;

  std::size_t inputs() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

struct LayerSpec {
  std::size_t units;
  Activation activation;
};

/// Layer sizes and activations. Hidden layers use LeakyReLU, the output layer is linear.
struct Architecture {
  std::size_t input_dim = 1;
  std::vector<LayerSpec> layers;
  double alpha = kDefaultLeakyAlpha;

  std::size_t output_dim() const noexcept { return layers.empty() ? input_dim : layers.back().units; }

  /// 1 -> 75 -> 50 -> 23, the 22-joint plus end-flag network.
  static Architecture reference();
  /// Reference hidden sizes with `outputs` linear outputs.
  static Architecture with_outputs(std::size_t outputs);
  /// "1:75:50:23" style: input size then one entry per layer.
  static Architecture parse(std::string_view text);
  std::string to_string() const;
};

class MimicNetwork {
 public:
  /// Checks that layer dimensions chain and that every parameter is finite.
  MimicNetwork(std::size_t input_dim, std::vector<DenseLayer> layers, double alpha = kDefaultLeakyAlpha);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept;
  double alpha() const noexcept { return alpha_; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Mutable access for optimizers. Shapes must not be changed.
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  bool operator==(const MimicNetwork& other) const;

 private:
  std::size_t input_dim_;
  std::vector<DenseLayer> layers_;
  double alpha_;
};

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
};

/// Same shapes as the network's parameters, one entry per layer.
using GradientSet = std::vector<LayerGradient>;

/// J = 1/(2m) * sum_i ||target_i - pred_i||^2.
double mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

struct BackwardResult {
  double loss = 0.0;
  GradientSet gradients;
  Eigen::MatrixXd predictions;  ///< forward pass output, kept for metrics
};

/// Loss and exact gradient of mse_loss with respect to every parameter.
BackwardResult backward(const MimicNetwork& network, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct ParamCount {
  std::vector<std::size_t> per_layer;
  std::size_t total = 0;
};

ParamCount param_count(const MimicNetwork& network);
ParamCount param_count(const Architecture& architecture);

struct InitOptions {
  /// Give each first-layer unit a bias that places its kink at a random point
  /// of the unit input cube. With zero biases and inputs in [0, 1] every kink
  /// starts at the origin and the initial network is affine on the domain.
  bool spread_input_kinks = false;
};

/// Glorot-uniform weights in +-sqrt(6 / (in + out)), zero biases. Deterministic for a seed.
/// Weights do not depend on `options`; only first-layer biases do.
MimicNetwork initialize(const Architecture& architecture, std::uint64_t seed, const InitOptions& options = {});

// Weight file:
//   mimicnet layers=<k> input=<d> alpha=<float>
//   layer out=<o> in=<i> act=<leakyrelu|linear>
//   <o lines of i weights>
//   <one line of o biases>
void write_weights(std::ostream& out, const MimicNetwork& network);
MimicNetwork read_weights(std::istream& in);
void save_weights(const std::filesystem::path& path, const MimicNetwork& network);
MimicNetwork load_weights(const std::filesystem::path& path);

}  // namespace mimic
