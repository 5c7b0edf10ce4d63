#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formfind/amortizer.hpp"
#include "formfind/direct_opt.hpp"
#include "formfind/harness/config.hpp"
#include "formfind/harness/report.hpp"
#include "formfind/task.hpp"

namespace formfind::harness {

struct InferenceTiming {
  MeanStd total_ms;
  MeanStd encode_ms;
  MeanStd decode_ms;
  std::vector<double> per_target_ms;  // median over repeats
};

/// Per-target wall time of encode + decode (solve for ours, learned decoder
/// for nn / pinn): `warmup` untimed calls on the first target, then the
/// median of `repeats` timed calls per target, summarized across targets.
InferenceTiming measure_inference_time(const AmortizerModel& model, const Task& task,
                                       const std::vector<TaskSample>& samples, int repeats,
                                       int warmup = 3);

/// Shape and physics loss of the model's prediction on every sample plus the
/// timing split.
MethodReport evaluate_model(const std::string& name, const AmortizerModel& model, const Task& task,
                            const std::vector<TaskSample>& samples, int repeats);

struct OptOutcome {
  MethodReport report;
  std::vector<OptResult> results;
};

/// Direct optimization of every sample. Randomized inits use seed
/// `seed + index`; warm starts need `model`.
OptOutcome evaluate_optimizer(const std::string& name, const Task& task,
                              const std::vector<TaskSample>& samples, InitStrategy init,
                              const OptConfig& config, std::uint64_t seed,
                              const AmortizerModel* model = nullptr);

using Progress = std::function<void(const std::string&)>;

/// Method comparison on held-out targets. `models` maps method name (ours / nn / pinn)
/// to a trained model; "opt" runs direct optimization.
ExperimentReport run_eval(const ExperimentConfig& config, const Task& task,
                          const std::map<std::string, AmortizerModel>& models,
                          const Progress& progress = {});

struct DeltaRow {
  double delta = 0.0;
  std::map<std::string, MeanStd> shape;
  std::map<std::string, MeanStd> physics;
};

/// Targets blended between symmetric (delta=0) and asymmetric (delta=1)
/// control nets. The same symmetric/asymmetric seed pairs are used at every
/// delta.
std::vector<DeltaRow> sweep_generalization(const ShellTask& task,
                                           const std::map<std::string, AmortizerModel>& models,
                                           const std::vector<double>& deltas, int test_size,
                                           std::uint64_t test_seed);
nlohmann::json to_json(const std::vector<DeltaRow>& rows);

struct ScalingRow {
  int grid_side = 0;
  int nodes = 0;
  MeanStd shape_per_node;
  MeanStd physics;
  MeanStd inference_ms;
  double train_seconds = 0.0;
};

/// Trains `ours` at each grid size with the configured preset and evaluates on
/// held-out symmetric targets.
std::vector<ScalingRow> sweep_scaling(const ExperimentConfig& config,
                                      const std::vector<int>& grids,
                                      const Progress& progress = {},
                                      std::vector<AmortizerModel>* models = nullptr);
nlohmann::json to_json(const std::vector<ScalingRow>& rows);

struct KappaRow {
  double kappa = 0.0;
  MeanStd shape;
  MeanStd physics;
  double combined = 0.0;  // mean shape + mean physics, unweighted
};

struct KappaSweep {
  std::vector<KappaRow> rows;
  std::size_t best = 0;
  AmortizerModel best_model;
};

/// Trains one PINN per kappa and keeps the one with the lowest unweighted
/// shape + physics loss on the held-out set.
KappaSweep sweep_kappa(const ExperimentConfig& config, const Task& task,
                       const std::vector<double>& kappas, const Progress& progress = {});
nlohmann::json to_json(const KappaSweep& sweep);

/// {seed, kind, params, target, anchors, loads, mask}
nlohmann::json sample_to_json(const Task& task, const TaskSample& sample);
void write_dataset_jsonl(std::ostream& out, const Task& task,
                         const std::vector<TaskSample>& samples);

}  // namespace formfind::harness
