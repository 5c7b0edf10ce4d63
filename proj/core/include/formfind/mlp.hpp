#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "formfind/types.hpp"

namespace formfind {

enum class Activation { elu, softplus, identity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output
  Activation hidden = Activation::elu;
  Activation output = Activation::identity;

  /// Throws InvalidArgument unless there are >= 2 positive sizes.
  void validate() const;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Numerically stable softplus, floored at the smallest normal double so the
/// output stays strictly positive.
double softplus(double x);

/// Multilayer perceptron evaluated on column batches (one column per sample).
class Mlp {
 public:
  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp init(const MlpSpec& spec, std::uint64_t seed);
  Mlp(MlpSpec spec, std::vector<DenseLayer> layers);
  Mlp() = default;

  const MlpSpec& spec() const noexcept { return spec_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  int input_size() const { return spec_.layer_sizes.front(); }
  int output_size() const { return spec_.layer_sizes.back(); }
  std::size_t num_parameters() const;

  /// Intermediate values kept for the backward pass.
  struct Tape {
    std::vector<Matrix> inputs;       // input of each layer
    std::vector<Matrix> preactivations;
  };

  Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs, Tape& tape) const;

  struct Gradients {
    std::vector<DenseLayer> layers;  // same shapes as the parameters
    Matrix inputs;                   // d loss / d inputs
  };

  /// Backpropagate d loss / d outputs (same shape as the forward output).
  Gradients backward(const Tape& tape, const Matrix& output_grad) const;

  /// Flatten parameters (layer by layer: weight column-major, then bias).
  Vector pack() const;
  void unpack(const Vector& flat);
  static Vector pack(const std::vector<DenseLayer>& layers);

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// params -= lr * mhat / (sqrt(vhat) + eps)
  void step(Vector& params, const Vector& grad, double learning_rate);
  long steps() const noexcept { return t_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  Vector m_;
  Vector v_;
};

/// Scale `grad` so that its norm is at most `max_norm`. Returns the norm
/// before clipping. Gradients within the limit are left untouched.
double clip_global_norm(Vector& grad, double max_norm);

}  // namespace formfind
