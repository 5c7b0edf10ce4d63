#include "formfind/mlp.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "formfind/errors.hpp"

namespace formfind {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::elu:
      return "elu";
    case Activation::softplus:
      return "softplus";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "elu") return Activation::elu;
  if (name == "softplus") return Activation::softplus;
  if (name == "identity") return Activation::identity;
  throw InvalidArgument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw InvalidArgument("an MLP needs an input and an output size");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw InvalidArgument("MLP layer sizes must be positive");
  }
}

double softplus(double x) {
  const double y = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  return std::max(y, std::numeric_limits<double>::min());
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void apply(Activation act, Matrix& z) {
  switch (act) {
    case Activation::elu:
      z = z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
      break;
    case Activation::softplus:
      z = z.unaryExpr([](double v) { return softplus(v); });
      break;
    case Activation::identity:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative at `pre`.
void apply_derivative(Activation act, const Matrix& pre, Matrix& grad) {
  switch (act) {
    case Activation::elu:
      grad.array() *= pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }).array();
      break;
    case Activation::softplus:
      grad.array() *= pre.unaryExpr([](double v) { return sigmoid(v); }).array();
      break;
    case Activation::identity:
      break;
  }
}

}  // namespace

Mlp::Mlp(MlpSpec spec, std::vector<DenseLayer> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.validate();
  if (layers_.size() + 1 != spec_.layer_sizes.size()) {
    throw InvalidArgument("layer count does not match the MLP spec");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight.rows() != spec_.layer_sizes[l + 1] ||
        layers_[l].weight.cols() != spec_.layer_sizes[l] ||
        layers_[l].bias.size() != spec_.layer_sizes[l + 1]) {
      throw InvalidArgument("layer " + std::to_string(l) + " has the wrong shape");
    }
  }
}

Mlp Mlp::init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(out, in), Vector(out)};
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = dist(rng);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = dist(rng);
    layers.push_back(std::move(layer));
  }
  return Mlp(spec, std::move(layers));
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

Matrix Mlp::forward(const Matrix& inputs) const {
  Tape tape;
  return forward(inputs, tape);
}

Matrix Mlp::forward(const Matrix& inputs, Tape& tape) const {
  if (inputs.rows() != input_size()) {
    throw InvalidArgument("MLP expects inputs of size " + std::to_string(input_size()) +
                          ", got " + std::to_string(inputs.rows()));
  }
  tape.inputs.clear();
  tape.preactivations.clear();
  Matrix x = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    tape.inputs.push_back(x);
    Matrix z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    tape.preactivations.push_back(z);
    apply(l + 1 == layers_.size() ? spec_.output : spec_.hidden, z);
    x = std::move(z);
  }
  return x;
}

Mlp::Gradients Mlp::backward(const Tape& tape, const Matrix& output_grad) const {
  Gradients grads;
  grads.layers.resize(layers_.size());
  Matrix g = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    apply_derivative(k + 1 == layers_.size() ? spec_.output : spec_.hidden,
                     tape.preactivations[k], g);
    grads.layers[k].weight = g * tape.inputs[k].transpose();
    grads.layers[k].bias = g.rowwise().sum();
    g = layers_[k].weight.transpose() * g;
  }
  grads.inputs = std::move(g);
  return grads;
}

Vector Mlp::pack(const std::vector<DenseLayer>& layers) {
  Eigen::Index n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  Vector flat(n);
  Eigen::Index at = 0;
  for (const auto& layer : layers) {
    flat.segment(at, layer.weight.size()) = layer.weight.reshaped();
    at += layer.weight.size();
    flat.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
  }
  return flat;
}

Vector Mlp::pack() const { return pack(layers_); }

void Mlp::unpack(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw InvalidArgument("parameter vector has the wrong length");
  }
  Eigen::Index at = 0;
  for (auto& layer : layers_) {
    layer.weight.reshaped() = flat.segment(at, layer.weight.size());
    at += layer.weight.size();
    layer.bias = flat.segment(at, layer.bias.size());
    at += layer.bias.size();
  }
}

}  // namespace formfind
