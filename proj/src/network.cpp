#include "mimic/network.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "mimic/error.hpp"
#include "mimic/text_io.hpp"

namespace mimic {

namespace {

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation activation, double alpha) {
  if (activation == Activation::linear) return z;
  return z.unaryExpr([alpha](double v) { return leaky_relu(v, alpha); });
}

bool all_finite(const DenseLayer& layer) { return layer.weights.allFinite() && layer.biases.allFinite(); }

}  // namespace

std::string_view to_string(Activation activation) {
  return activation == Activation::leaky_relu ? "leakyrelu" : "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "leakyrelu") return Activation::leaky_relu;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Architecture Architecture::reference() { return with_outputs(23); }

Architecture Architecture::with_outputs(std::size_t outputs) {
  Architecture arch;
  arch.input_dim = 1;
  arch.layers = {{75, Activation::leaky_relu}, {50, Activation::leaky_relu}, {outputs, Activation::linear}};
  return arch;
}

Architecture Architecture::parse(std::string_view text) {
  const auto fields = text::split(text, ':');
  if (fields.size() < 2) throw ConfigError("architecture '" + std::string(text) + "' needs input:...:output");
  std::vector<std::size_t> sizes;
  for (std::string_view f : fields) {
    long v = 0;
    try {
      v = text::parse_long(f, 0);
    } catch (const ParseError&) {
      throw ConfigError("architecture '" + std::string(text) + "' has a non-integer size");
    }
    if (v <= 0) throw ConfigError("architecture '" + std::string(text) + "' has a zero-size layer");
    sizes.push_back(static_cast<std::size_t>(v));
  }
  Architecture arch;
  arch.input_dim = sizes.front();
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const bool last = i + 1 == sizes.size();
    arch.layers.push_back({sizes[i], last ? Activation::linear : Activation::leaky_relu});
  }
  return arch;
}

std::string Architecture::to_string() const {
  std::string out = std::to_string(input_dim);
  for (const LayerSpec& l : layers) out += ":" + std::to_string(l.units);
  return out;
}

MimicNetwork::MimicNetwork(std::size_t input_dim, std::vector<DenseLayer> layers, double alpha)
    : input_dim_(input_dim), layers_(std::move(layers)), alpha_(alpha) {
  if (input_dim_ == 0) throw ConfigError("network input dimension must be positive");
  if (layers_.empty()) throw ConfigError("network needs at least one layer");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw ConfigError("LeakyReLU alpha must be positive");
  std::size_t expected_in = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    if (l.outputs() == 0) throw ConfigError("layer " + std::to_string(i) + " has zero units");
    if (l.inputs() != expected_in || static_cast<std::size_t>(l.biases.size()) != l.outputs()) {
      throw ShapeError("layer " + std::to_string(i) + " has weights " + shape_string(l.weights.rows(), l.weights.cols()) +
                       " and " + std::to_string(l.biases.size()) + " biases; expected " + std::to_string(expected_in) +
                       " inputs");
    }
    if (!all_finite(l)) throw ValidationError("layer " + std::to_string(i) + " has non-finite parameters");
    expected_in = l.outputs();
  }
}

std::size_t MimicNetwork::output_dim() const noexcept { return layers_.back().outputs(); }

Eigen::VectorXd MimicNetwork::forward(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim_) {
    throw ShapeError("input has " + std::to_string(x.size()) + " values, network expects " + std::to_string(input_dim_));
  }
  return forward_batch(x);
}

Eigen::MatrixXd MimicNetwork::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_dim_) {
    throw ShapeError("input batch has " + std::to_string(inputs.rows()) + " rows, network expects " +
                     std::to_string(input_dim_));
  }
  Eigen::MatrixXd a = inputs;
  for (const DenseLayer& l : layers_) {
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.biases;
    a = activate(z, l.activation, alpha_);
  }
  return a;
}

bool MimicNetwork::operator==(const MimicNetwork& other) const {
  if (input_dim_ != other.input_dim_ || alpha_ != other.alpha_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& a = layers_[i];
    const DenseLayer& b = other.layers_[i];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
        a.biases.size() != b.biases.size() || a.weights != b.weights || a.biases != b.biases) {
      return false;
    }
  }
  return true;
}

double mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ShapeError("mse_loss: predictions " + shape_string(predictions.rows(), predictions.cols()) + " vs targets " +
                     shape_string(targets.rows(), targets.cols()));
  }
  if (predictions.cols() == 0) throw ShapeError("mse_loss: empty batch");
  return (targets - predictions).squaredNorm() / (2.0 * static_cast<double>(predictions.cols()));
}

BackwardResult backward(const MimicNetwork& network, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  const auto& layers = network.layers();
  if (static_cast<std::size_t>(targets.rows()) != network.output_dim() || targets.cols() != inputs.cols()) {
    throw ShapeError("backward: targets " + shape_string(targets.rows(), targets.cols()) + " do not match network output " +
                     std::to_string(network.output_dim()) + " x batch " + std::to_string(inputs.cols()));
  }
  if (static_cast<std::size_t>(inputs.rows()) != network.input_dim()) {
    throw ShapeError("backward: inputs have " + std::to_string(inputs.rows()) + " rows, network expects " +
                     std::to_string(network.input_dim()));
  }
  if (inputs.cols() == 0) throw ShapeError("backward: empty batch");

  const double alpha = network.alpha();
  // activations[0] is the input; pre_activations[l] feeds activations[l + 1].
  std::vector<Eigen::MatrixXd> activations{inputs};
  std::vector<Eigen::MatrixXd> pre_activations;
  activations.reserve(layers.size() + 1);
  pre_activations.reserve(layers.size());
  for (const DenseLayer& l : layers) {
    Eigen::MatrixXd z = l.weights * activations.back();
    z.colwise() += l.biases;
    activations.push_back(activate(z, l.activation, alpha));
    pre_activations.push_back(std::move(z));
  }

  BackwardResult result;
  result.predictions = activations.back();
  result.loss = mse_loss(result.predictions, targets);
  result.gradients.resize(layers.size());

  const double m = static_cast<double>(inputs.cols());
  Eigen::MatrixXd upstream = (result.predictions - targets) / m;  // dJ/dA at the output
  for (std::size_t i = layers.size(); i-- > 0;) {
    const DenseLayer& l = layers[i];
    Eigen::MatrixXd delta = upstream;  // dJ/dZ
    if (l.activation == Activation::leaky_relu) {
      delta.array() *= pre_activations[i].unaryExpr([alpha](double v) { return leaky_relu_derivative(v, alpha); }).array();
    }
    result.gradients[i].weights = delta * activations[i].transpose();
    result.gradients[i].biases = delta.rowwise().sum();
    if (i > 0) upstream = l.weights.transpose() * delta;
  }
  return result;
}

ParamCount param_count(const MimicNetwork& network) {
  ParamCount count;
  for (const DenseLayer& l : network.layers()) {
    count.per_layer.push_back(l.outputs() * l.inputs() + l.outputs());
    count.total += count.per_layer.back();
  }
  return count;
}

ParamCount param_count(const Architecture& architecture) {
  ParamCount count;
  std::size_t in = architecture.input_dim;
  for (const LayerSpec& l : architecture.layers) {
    count.per_layer.push_back(l.units * in + l.units);
    count.total += count.per_layer.back();
    in = l.units;
  }
  return count;
}

MimicNetwork initialize(const Architecture& architecture, std::uint64_t seed, const InitOptions& options) {
  if (architecture.input_dim == 0) throw ConfigError("architecture input dimension must be positive");
  if (architecture.layers.empty()) throw ConfigError("architecture needs at least one layer");
  std::mt19937_64 rng(seed);
  std::mt19937_64 kink_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<DenseLayer> layers;
  std::size_t in = architecture.input_dim;
  for (const LayerSpec& spec : architecture.layers) {
    if (spec.units == 0) throw ConfigError("architecture has a zero-size layer");
    const double bound = std::sqrt(6.0 / static_cast<double>(in + spec.units));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer;
    layer.activation = spec.activation;
    layer.weights.resize(static_cast<Eigen::Index>(spec.units), static_cast<Eigen::Index>(in));
    // Row-major fill so the draw order matches the text format.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    }
    layer.biases = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.units));
    if (options.spread_input_kinks && layers.empty()) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        double through = 0.0;
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) through += layer.weights(r, c) * unit(kink_rng);
        layer.biases(r) = -through;
      }
    }
    layers.push_back(std::move(layer));
    in = spec.units;
  }
  return MimicNetwork(architecture.input_dim, std::move(layers), architecture.alpha);
}

void write_weights(std::ostream& out, const MimicNetwork& network) {
  out << "mimicnet layers=" << network.layers().size() << " input=" << network.input_dim()
      << " alpha=" << text::format_double(network.alpha()) << '\n';
  for (const DenseLayer& l : network.layers()) {
    out << "layer out=" << l.outputs() << " in=" << l.inputs() << " act=" << to_string(l.activation) << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        if (c > 0) out << ' ';
        out << text::format_double(l.weights(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) {
      if (r > 0) out << ' ';
      out << text::format_double(l.biases(r));
    }
    out << '\n';
  }
}

MimicNetwork read_weights(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  auto next_fields = [&](const char* what) {
    if (!std::getline(in, raw)) throw ParseError(line_no + 1, std::string("unexpected end of weight file, expected ") + what);
    ++line_no;
    return text::split(text::trim_line(raw), ' ');
  };

  auto header = next_fields("header");
  if (header.size() != 4 || header[0] != "mimicnet") {
    throw ParseError(line_no, "expected 'mimicnet layers=<k> input=<d> alpha=<float>'");
  }
  const long layer_count = text::parse_long(text::expect_field(header[1], "layers", line_no), line_no);
  const long input_dim = text::parse_long(text::expect_field(header[2], "input", line_no), line_no);
  const double alpha = text::parse_double(text::expect_field(header[3], "alpha", line_no), line_no);
  if (layer_count <= 0 || input_dim <= 0) throw ParseError(line_no, "layers and input must be positive");

  std::vector<DenseLayer> layers;
  for (long k = 0; k < layer_count; ++k) {
    auto lh = next_fields("layer header");
    if (lh.size() != 4 || lh[0] != "layer") throw ParseError(line_no, "expected 'layer out=<o> in=<i> act=<name>'");
    const long out_dim = text::parse_long(text::expect_field(lh[1], "out", line_no), line_no);
    const long in_dim = text::parse_long(text::expect_field(lh[2], "in", line_no), line_no);
    if (out_dim <= 0 || in_dim <= 0) throw ParseError(line_no, "layer dimensions must be positive");
    DenseLayer layer;
    try {
      layer.activation = parse_activation(text::expect_field(lh[3], "act", line_no));
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
    layer.weights.resize(out_dim, in_dim);
    for (long r = 0; r < out_dim; ++r) {
      auto row = next_fields("weight row");
      if (static_cast<long>(row.size()) != in_dim) {
        throw ParseError(line_no, "expected " + std::to_string(in_dim) + " weights, got " + std::to_string(row.size()));
      }
      for (long c = 0; c < in_dim; ++c) layer.weights(r, c) = text::parse_double(row[static_cast<std::size_t>(c)], line_no);
    }
    auto biases = next_fields("bias row");
    if (static_cast<long>(biases.size()) != out_dim) {
      throw ParseError(line_no, "expected " + std::to_string(out_dim) + " biases, got " + std::to_string(biases.size()));
    }
    layer.biases.resize(out_dim);
    for (long r = 0; r < out_dim; ++r) layer.biases(r) = text::parse_double(biases[static_cast<std::size_t>(r)], line_no);
    layers.push_back(std::move(layer));
  }
  try {
    return MimicNetwork(static_cast<std::size_t>(input_dim), std::move(layers), alpha);
  } catch (const Error& e) {
    throw ParseError(0, std::string("weight file describes an invalid network: ") + e.what());
  }
}

void save_weights(const std::filesystem::path& path, const MimicNetwork& network) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write weight file " + path.string());
  write_weights(out, network);
}

MimicNetwork load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open weight file " + path.string());
  return read_weights(in);
}

}  // namespace mimic
