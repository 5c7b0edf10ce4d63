#include "formfind/task.hpp"

#include <utility>

#include <nlohmann/json.hpp>

#include "formfind/errors.hpp"

namespace formfind {

Task::Task(Topology topology, Vector signs, double shift, double p, double reg_weight,
           int encoder_input_size)
    : topology_(std::move(topology)),
      signs_(std::move(signs)),
      shift_(shift),
      p_(p),
      reg_weight_(reg_weight),
      encoder_input_size_(encoder_input_size) {}

namespace {

Vector flatten_rows(const Points& pts) {
  Vector out(3 * pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out.segment<3>(3 * i) = pts.row(i).transpose();
  return out;
}

}  // namespace

ShellTask::ShellTask(int grid_side, double plan_width, double area_load)
    : Task(build_grid_shell_topology(grid_side),
           -Vector::Ones(2 * grid_side * (grid_side - 1)), 0.0, 1.0, 0.0,
           3 * grid_side * grid_side),
      grid_side_(grid_side),
      plan_width_(plan_width),
      area_load_(area_load) {}

TaskSample ShellTask::sample_from_controls(const BezierControlGrid& grid,
                                           std::uint64_t seed) const {
  auto inst = shell_target_from_controls(grid, grid_side_, area_load_);
  TaskSample s;
  s.seed = seed;
  s.params = to_json(grid);
  s.encoder_input = flatten_rows(inst.target.positions);
  s.target = std::move(inst.target);
  s.bc = std::move(inst.bc);
  return s;
}

TaskSample ShellTask::sample(std::uint64_t seed) const {
  return sample_from_controls(sample_symmetric_controls(seed, plan_width_), seed);
}

TaskSample ShellTask::sample_interpolated(std::uint64_t seed, std::uint64_t asym_seed,
                                          double delta) const {
  const auto sym = sample_symmetric_controls(seed, plan_width_);
  const auto asym = sample_asymmetric_controls(asym_seed, plan_width_);
  return sample_from_controls(interpolate_controls(sym, asym, delta), seed);
}

nlohmann::json ShellTask::params() const {
  return {{"task", "shells"},
          {"grid_side", grid_side_},
          {"plan_width", plan_width_},
          {"area_load", area_load_}};
}

TowerTask::TowerTask(int rings, int points_per_ring, double height)
    : Task(build_tower_topology(rings, points_per_ring), tower_signs(rings, points_per_ring),
           1.0, 2.0, 10.0, 9 * points_per_ring) {
  shape_.rings = rings;
  shape_.points_per_ring = points_per_ring;
  shape_.height = height;
  shape_.validate();
}

TaskSample TowerTask::sample_from_params(const TowerParams& params, std::uint64_t seed) const {
  if (params.rings != shape_.rings || params.points_per_ring != shape_.points_per_ring ||
      params.height != shape_.height) {
    throw InvalidArgument("tower parameters do not match the task discretization");
  }
  auto inst = tower_target_from_params(params);
  TaskSample s;
  s.seed = seed;
  s.params = to_json(params);
  s.encoder_input = flatten_rows(inst.rings);
  s.target = std::move(inst.target);
  s.bc = std::move(inst.bc);
  return s;
}

TaskSample TowerTask::sample(std::uint64_t seed) const {
  return sample_from_params(sample_tower_params(seed, shape_), seed);
}

nlohmann::json TowerTask::params() const {
  return {{"task", "towers"},
          {"rings", shape_.rings},
          {"points_per_ring", shape_.points_per_ring},
          {"height", shape_.height}};
}

std::unique_ptr<Task> make_task(const nlohmann::json& params) {
  const auto name = params.at("task").get<std::string>();
  if (name == "shells") {
    return std::make_unique<ShellTask>(params.at("grid_side").get<int>(),
                                       params.value("plan_width", 10.0),
                                       params.value("area_load", 0.5));
  }
  if (name == "towers") {
    return std::make_unique<TowerTask>(params.at("rings").get<int>(),
                                       params.at("points_per_ring").get<int>(),
                                       params.value("height", 10.0));
  }
  throw InvalidArgument("unknown task '" + name + "'");
}

}  // namespace formfind
