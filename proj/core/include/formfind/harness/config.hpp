#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formfind/direct_opt.hpp"
#include "formfind/training.hpp"

namespace formfind::harness {

/// Settings shared by every CLI command. Loaded from a JSON file whose keys are
/// checked strictly (see README for the key list); CLI flags override fields.
struct ExperimentConfig {
  std::string task = "shells";
  int grid_side = 10;
  double plan_width = 10.0;
  double area_load = 0.5;
  int rings = 11;
  int points_per_ring = 8;
  double height = 10.0;

  std::string preset = "desk";
  std::uint64_t seed = 0;       // training
  std::uint64_t test_seed = 1;  // held-out targets
  int test_size = 100;

  std::optional<int> hidden_size;
  std::optional<int> hidden_layers;
  std::optional<int> batch_size;
  std::optional<std::vector<LrStage>> schedule;
  std::optional<double> clip_norm;

  double kappa = 1.0;
  std::vector<double> kappas = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> deltas = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> grids = {10, 16, 23};
  std::vector<std::string> methods = {"ours", "nn", "pinn", "opt"};

  OptConfig opt;
  InitStrategy opt_init = InitStrategy::randomized;
  std::uint64_t opt_seed = 0;

  int timing_repeats = 5;
  std::string output_dir = "out";
};

/// Throws InvalidArgument on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

std::unique_ptr<Task> make_task(const ExperimentConfig& config);
/// Same task family at another grid size (shells only).
std::unique_ptr<Task> make_task(const ExperimentConfig& config, int grid_side);

/// Named preset for (task, kind) with the config's overrides applied.
TrainConfig train_config(const ExperimentConfig& config, const Task& task, ModelKind kind);

}  // namespace formfind::harness
