#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "formfind/amortizer.hpp"

namespace formfind {

struct LrStage {
  int steps = 0;
  double learning_rate = 0.0;
};

struct TrainConfig {
  int batch_size = 64;
  std::vector<LrStage> schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::optional<double> clip_norm;
  std::uint64_t seed = 0;
  Architecture architecture;

  int total_steps() const;
  double learning_rate(int step) const;
  void validate() const;

  /// Full-size settings: H=256, B=64 / 10000 steps for shells, B=16 with
  /// clipping for towers.
  static TrainConfig full(const Task& task, ModelKind kind);
  /// Laptop-scale settings: 2000 steps, H=64 on shells.
  static TrainConfig desk(const Task& task, ModelKind kind);
  /// "full" or "desk".
  static TrainConfig preset(const std::string& name, const Task& task, ModelKind kind);
};

struct TrainRecord {
  int step = 0;
  double shape = 0.0;    // batch mean of L_shape
  double physics = 0.0;  // batch mean of L_physics
  double reg = 0.0;      // unweighted L_reg (0 when the task disables it)
  double loss = 0.0;     // objective the optimizer saw
};

struct TrainResult {
  AmortizerModel model;
  std::vector<TrainRecord> curve;
};

using TrainCallback = std::function<void(const TrainRecord&)>;

/// Adam over freshly sampled batches. `kappa` weights the physics term and is
/// only used by the PINN. Throws NonFiniteLossError (with the step index) on a
/// non-finite objective; a singular system inside a batch is rethrown as
/// SingularSystemError naming the step and sample seed.
TrainResult train(ModelKind kind, const Task& task, const TrainConfig& config, double kappa = 1.0,
                  const TrainCallback& on_step = {});

/// Training seeds have the top bit clear, held-out seeds have it set, so the
/// two sets never intersect.
inline constexpr std::uint64_t kHeldOutBit = std::uint64_t{1} << 63;

std::vector<std::uint64_t> held_out_seeds(std::uint64_t base, int count);
std::vector<TaskSample> held_out_samples(const Task& task, std::uint64_t base, int count);

nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const TrainRecord& record);

}  // namespace formfind
