#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "formfind/datagen.hpp"
#include "formfind/losses.hpp"
#include "formfind/structure.hpp"

namespace formfind {

/// One target drawn from a task's shape family.
struct TaskSample {
  std::uint64_t seed = 0;
  ShapeTarget target;
  BoundaryConditions bc;
  Vector encoder_input;
  nlohmann::json params;  // generating parameters (control grid or ring ellipses)
};

/// A shape-matching task: fixed topology, force sign pattern s, shift tau,
/// loss exponent p, regularization weight and a target sampler.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual TaskSample sample(std::uint64_t seed) const = 0;
  virtual nlohmann::json params() const = 0;
  /// Number of hidden layers the reference architecture uses for this task.
  virtual int hidden_layers() const = 0;

  const Topology& topology() const noexcept { return topology_; }
  const Vector& signs() const noexcept { return signs_; }
  double shift() const noexcept { return shift_; }
  double p() const noexcept { return p_; }
  /// Weight of the stiffness-variance regularizer (0 disables it).
  double reg_weight() const noexcept { return reg_weight_; }
  int encoder_input_size() const noexcept { return encoder_input_size_; }

 protected:
  Task(Topology topology, Vector signs, double shift, double p, double reg_weight,
       int encoder_input_size);

 private:
  Topology topology_;
  Vector signs_;
  double shift_;
  double p_;
  double reg_weight_;
  int encoder_input_size_;
};

/// Compression-only masonry shells on a G x G grid: s = -1, tau = 0, p = 1.
class ShellTask final : public Task {
 public:
  explicit ShellTask(int grid_side, double plan_width = 10.0, double area_load = 0.5);

  std::string name() const override { return "shells"; }
  TaskSample sample(std::uint64_t seed) const override;  // doubly symmetric
  nlohmann::json params() const override;
  int hidden_layers() const override { return 2; }

  TaskSample sample_from_controls(const BezierControlGrid& grid, std::uint64_t seed = 0) const;
  /// Blend of the symmetric net from `seed` and the asymmetric net from
  /// `asym_seed`.
  TaskSample sample_interpolated(std::uint64_t seed, std::uint64_t asym_seed,
                                 double delta) const;

  int grid_side() const noexcept { return grid_side_; }
  double plan_width() const noexcept { return plan_width_; }
  double area_load() const noexcept { return area_load_; }

 private:
  int grid_side_;
  double plan_width_;
  double area_load_;
};

/// Cable-net towers: compression middle ring, tension elsewhere, tau = 1,
/// p = 2, lambda = 10. The encoder sees only the three parametrizing rings.
class TowerTask final : public Task {
 public:
  TowerTask(int rings, int points_per_ring, double height = 10.0);

  std::string name() const override { return "towers"; }
  TaskSample sample(std::uint64_t seed) const override;
  nlohmann::json params() const override;
  int hidden_layers() const override { return 4; }

  TaskSample sample_from_params(const TowerParams& params, std::uint64_t seed = 0) const;

  const TowerParams& shape() const noexcept { return shape_; }

 private:
  TowerParams shape_;
};

/// Builds a task from its `params()` document.
std::unique_ptr<Task> make_task(const nlohmann::json& params);

}  // namespace formfind
