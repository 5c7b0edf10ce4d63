#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "formfind/fdm.hpp"
#include "formfind/mlp.hpp"
#include "formfind/task.hpp"

namespace formfind {

/// ours: MLP encoder + force density solver. nn / pinn: MLP encoder + MLP
/// decoder (pinn adds the residual penalty during training).
enum class ModelKind { ours, nn, pinn };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// q = s * (y + tau) applied to the strictly positive encoder output y.
struct EncoderHead {
  Vector signs;
  double shift = 0.0;

  ForceDensities apply(const Vector& positive) const;
};

struct Architecture {
  int hidden_size = 256;
  int hidden_layers = 2;
};

inline constexpr int kModelFormatVersion = 1;

struct AmortizerModel {
  ModelKind kind = ModelKind::ours;
  nlohmann::json task;  // Task::params()
  Mlp encoder;
  std::optional<Mlp> decoder;
  EncoderHead head;
  nlohmann::json meta = nlohmann::json::object();
};

/// Encoder: [3N or 3R, H x hidden_layers, M] with softplus output. Baseline
/// decoders: [M + L, H x hidden_layers, 3 N_u] with identity output.
AmortizerModel init_model(ModelKind kind, const Task& task, const Architecture& arch,
                          std::uint64_t seed);

ForceDensities encode(const AmortizerModel& model, const Vector& encoder_input);

/// Learnable decoder: maps [q; b] to free-node positions and appends the
/// anchors stored in b. Returns all N rows.
Points decode_baseline(const Mlp& decoder, const Topology& topology, const Vector& q,
                       const Vector& boundary);

struct Prediction {
  ForceDensities q;
  EquilibriumState state;
  double encode_ms = 0.0;
  double decode_ms = 0.0;  // solve (ours) or learnable decoder (nn/pinn)
};

/// Encode then decode. For `ours` the residuals vanish up to round-off; for
/// the baselines they are whatever the decoder's shape implies.
Prediction predict(const AmortizerModel& model, const Task& task, const TaskSample& sample);

nlohmann::json model_to_json(const AmortizerModel& model);
AmortizerModel model_from_json(const nlohmann::json& doc);
void save_model(const AmortizerModel& model, const std::string& path);
AmortizerModel load_model(const std::string& path);

}  // namespace formfind
