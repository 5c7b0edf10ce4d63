#include "formfind/amortizer.hpp"

#include <chrono>
#include <utility>

#include "formfind/errors.hpp"

namespace formfind {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ours:
      return "ours";
    case ModelKind::nn:
      return "nn";
    case ModelKind::pinn:
      return "pinn";
  }
  return "ours";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "ours") return ModelKind::ours;
  if (name == "nn") return ModelKind::nn;
  if (name == "pinn") return ModelKind::pinn;
  throw InvalidArgument("unknown model kind '" + name + "'");
}

ForceDensities EncoderHead::apply(const Vector& positive) const {
  if (positive.size() != signs.size()) {
    throw InvalidArgument("encoder output does not match the sign vector");
  }
  return {signs.cwiseProduct((positive.array() + shift).matrix()), signs, shift};
}

namespace {

MlpSpec stack(int in, const Architecture& arch, int out, Activation output) {
  MlpSpec spec;
  spec.layer_sizes.push_back(in);
  for (int l = 0; l < arch.hidden_layers; ++l) spec.layer_sizes.push_back(arch.hidden_size);
  spec.layer_sizes.push_back(out);
  spec.hidden = Activation::elu;
  spec.output = output;
  return spec;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

AmortizerModel init_model(ModelKind kind, const Task& task, const Architecture& arch,
                          std::uint64_t seed) {
  const Topology& topo = task.topology();
  AmortizerModel model;
  model.kind = kind;
  model.task = task.params();
  model.encoder = Mlp::init(
      stack(task.encoder_input_size(), arch, topo.num_bars(), Activation::softplus), seed);
  model.head = {task.signs(), task.shift()};
  if (kind != ModelKind::ours) {
    model.decoder = Mlp::init(stack(topo.num_bars() + topo.boundary_vector_size(), arch,
                                    3 * topo.num_free(), Activation::identity),
                              seed ^ 0x9e3779b97f4a7c15ULL);
  }
  return model;
}

ForceDensities encode(const AmortizerModel& model, const Vector& encoder_input) {
  if (encoder_input.size() != model.encoder.input_size()) {
    throw InvalidArgument("encoder expects " + std::to_string(model.encoder.input_size()) +
                          " inputs, got " + std::to_string(encoder_input.size()));
  }
  const Matrix y = model.encoder.forward(encoder_input);
  return model.head.apply(y.col(0));
}

Points decode_baseline(const Mlp& decoder, const Topology& topology, const Vector& q,
                       const Vector& boundary) {
  const int m = topology.num_bars();
  const int l = topology.boundary_vector_size();
  if (q.size() != m || boundary.size() != l) {
    throw InvalidArgument("decoder input must hold M force densities and L boundary values");
  }
  Vector input(m + l);
  input << q, boundary;
  const Matrix out = decoder.forward(input);
  const int nu = topology.num_free();
  Points free_positions(nu, 3);
  for (int i = 0; i < nu; ++i) free_positions.row(i) = out.col(0).segment<3>(3 * i).transpose();
  Points anchors(topology.num_fixed(), 3);
  for (int s = 0; s < topology.num_fixed(); ++s) {
    anchors.row(s) = boundary.segment<3>(3 * s).transpose();
  }
  return assemble_positions(topology, free_positions, anchors);
}

Prediction predict(const AmortizerModel& model, const Task& task, const TaskSample& sample) {
  const Topology& topo = task.topology();
  Prediction out;
  auto t0 = std::chrono::steady_clock::now();
  out.q = encode(model, sample.encoder_input);
  out.encode_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  if (model.kind == ModelKind::ours) {
    out.state = solve_equilibrium(topo, out.q.values, sample.bc);
    out.decode_ms = elapsed_ms(t0);
    return out;
  }
  out.state.positions = decode_baseline(*model.decoder, topo, out.q.values, sample.bc.flatten());
  out.decode_ms = elapsed_ms(t0);
  bar_forces(topo, out.q.values, out.state.positions, out.state.lengths, out.state.forces);
  out.state.residuals = residual_forces(out.state.positions, out.q.values, sample.bc, topo);
  return out;
}

}  // namespace formfind
