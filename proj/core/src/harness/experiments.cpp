#include "formfind/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>

#include "formfind/errors.hpp"
#include "formfind/losses.hpp"
#include "formfind/training.hpp"

namespace formfind::harness {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json points_json(const Points& p) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) rows.push_back({p(i, 0), p(i, 1), p(i, 2)});
  return rows;
}

json stat(const MeanStd& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

InferenceTiming measure_inference_time(const AmortizerModel& model, const Task& task,
                                       const std::vector<TaskSample>& samples, int repeats,
                                       int warmup) {
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  InferenceTiming out;
  if (samples.empty()) return out;
  for (int i = 0; i < warmup; ++i) (void)predict(model, task, samples.front());
  std::vector<double> enc_med;
  std::vector<double> dec_med;
  for (const auto& s : samples) {
    std::vector<double> tot;
    std::vector<double> enc;
    std::vector<double> dec;
    for (int r = 0; r < repeats; ++r) {
      const Prediction p = predict(model, task, s);
      tot.push_back(p.encode_ms + p.decode_ms);
      enc.push_back(p.encode_ms);
      dec.push_back(p.decode_ms);
    }
    out.per_target_ms.push_back(median(tot));
    enc_med.push_back(median(enc));
    dec_med.push_back(median(dec));
  }
  out.total_ms = mean_std(out.per_target_ms);
  out.encode_ms = mean_std(enc_med);
  out.decode_ms = mean_std(dec_med);
  return out;
}

MethodReport evaluate_model(const std::string& name, const AmortizerModel& model, const Task& task,
                            const std::vector<TaskSample>& samples, int repeats) {
  MethodReport report;
  report.method = name;
  for (int i = 0; i < 3 && !samples.empty(); ++i) (void)predict(model, task, samples.front());
  for (const auto& s : samples) {
    std::vector<double> tot;
    std::vector<double> enc;
    std::vector<double> dec;
    Prediction p;
    for (int r = 0; r < repeats; ++r) {
      p = predict(model, task, s);
      tot.push_back(p.encode_ms + p.decode_ms);
      enc.push_back(p.encode_ms);
      dec.push_back(p.decode_ms);
    }
    report.records.push_back({s.seed, shape_loss(p.state.positions, s.target, task.p()),
                              physics_loss(p.state.residuals), median(tot), median(enc),
                              median(dec)});
  }
  return report;
}

OptOutcome evaluate_optimizer(const std::string& name, const Task& task,
                              const std::vector<TaskSample>& samples, InitStrategy init,
                              const OptConfig& config, std::uint64_t seed,
                              const AmortizerModel* model) {
  OptOutcome out;
  out.report.method = name;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto t0 = Clock::now();
    OptResult r = optimize_sample(task, s, init, config, seed + i, model);
    const double ms = ms_since(t0);
    out.report.records.push_back(
        {s.seed, r.loss, physics_loss(r.state.residuals), ms, 0.0, ms});
    out.results.push_back(std::move(r));
  }
  return out;
}

ExperimentReport run_eval(const ExperimentConfig& config, const Task& task,
                          const std::map<std::string, AmortizerModel>& models,
                          const Progress& progress) {
  ExperimentReport report;
  report.task = task.name();
  report.task_params = task.params();
  report.test_seeds = held_out_seeds(config.test_seed, config.test_size);
  const auto samples = held_out_samples(task, config.test_seed, config.test_size);
  for (const auto& method : config.methods) {
    if (progress) progress("evaluating " + method);
    if (method == "opt") {
      report.methods.push_back(
          evaluate_optimizer("opt", task, samples, config.opt_init, config.opt, config.opt_seed)
              .report);
      continue;
    }
    const auto it = models.find(method);
    if (it == models.end()) throw InvalidArgument("no model given for method '" + method + "'");
    report.methods.push_back(
        evaluate_model(method, it->second, task, samples, config.timing_repeats));
  }
  report.meta = {{"seed", config.seed},
                 {"test_seed", config.test_seed},
                 {"config_hash", config_hash(to_json(config))},
                 {"config", to_json(config)},
                 {"host", host_info()}};
  return report;
}

std::vector<DeltaRow> sweep_generalization(const ShellTask& task,
                                           const std::map<std::string, AmortizerModel>& models,
                                           const std::vector<double>& deltas, int test_size,
                                           std::uint64_t test_seed) {
  const auto sym_seeds = held_out_seeds(test_seed, test_size);
  const auto asym_seeds = held_out_seeds(test_seed + 1, test_size);
  std::vector<DeltaRow> rows;
  for (double delta : deltas) {
    DeltaRow row;
    row.delta = delta;
    std::vector<TaskSample> samples;
    for (int i = 0; i < test_size; ++i) {
      samples.push_back(task.sample_interpolated(sym_seeds[static_cast<std::size_t>(i)],
                                                 asym_seeds[static_cast<std::size_t>(i)], delta));
    }
    for (const auto& [name, model] : models) {
      std::vector<double> shape;
      std::vector<double> phys;
      for (const auto& s : samples) {
        const Prediction p = predict(model, task, s);
        shape.push_back(shape_loss(p.state.positions, s.target, task.p()));
        phys.push_back(physics_loss(p.state.residuals));
      }
      row.shape[name] = mean_std(shape);
      row.physics[name] = mean_std(phys);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const std::vector<DeltaRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json shape = json::object();
    json phys = json::object();
    for (const auto& [k, v] : r.shape) shape[k] = stat(v);
    for (const auto& [k, v] : r.physics) phys[k] = stat(v);
    out.push_back({{"delta", r.delta}, {"shape", shape}, {"physics", phys}});
  }
  return out;
}

std::vector<ScalingRow> sweep_scaling(const ExperimentConfig& config, const std::vector<int>& grids,
                                      const Progress& progress,
                                      std::vector<AmortizerModel>* models) {
  if (config.task != "shells") throw InvalidArgument("the scaling sweep runs on shells");
  std::vector<ScalingRow> rows;
  for (int g : grids) {
    const auto task = make_task(config, g);
    if (progress) progress("training ours at G=" + std::to_string(g));
    const auto t0 = Clock::now();
    TrainResult trained = train(ModelKind::ours, *task, train_config(config, *task, ModelKind::ours));
    const double train_s = ms_since(t0) / 1000.0;
    const auto samples = held_out_samples(*task, config.test_seed, config.test_size);
    const MethodReport rep =
        evaluate_model("ours", trained.model, *task, samples, config.timing_repeats);
    ScalingRow row;
    row.grid_side = g;
    row.nodes = task->topology().num_nodes();
    std::vector<double> per_node;
    for (const auto& r : rep.records) per_node.push_back(r.shape / row.nodes);
    row.shape_per_node = mean_std(per_node);
    row.physics = rep.physics();
    row.inference_ms = rep.time_ms();
    row.train_seconds = train_s;
    rows.push_back(row);
    if (models) models->push_back(std::move(trained.model));
  }
  return rows;
}

json to_json(const std::vector<ScalingRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"grid_side", r.grid_side},
                   {"nodes", r.nodes},
                   {"shape_per_node", stat(r.shape_per_node)},
                   {"physics", stat(r.physics)},
                   {"inference_ms", stat(r.inference_ms)},
                   {"train_seconds", r.train_seconds}});
  }
  return out;
}

KappaSweep sweep_kappa(const ExperimentConfig& config, const Task& task,
                       const std::vector<double>& kappas, const Progress& progress) {
  if (kappas.empty()) throw InvalidArgument("kappa list is empty");
  const auto samples = held_out_samples(task, config.test_seed, config.test_size);
  KappaSweep sweep;
  double best = std::numeric_limits<double>::infinity();
  for (double kappa : kappas) {
    if (progress) progress("training pinn with kappa=" + std::to_string(kappa));
    TrainResult trained =
        train(ModelKind::pinn, task, train_config(config, task, ModelKind::pinn), kappa);
    const MethodReport rep = evaluate_model("pinn", trained.model, task, samples, 1);
    KappaRow row{kappa, rep.shape(), rep.physics(), rep.shape().mean + rep.physics().mean};
    if (row.combined < best) {
      best = row.combined;
      sweep.best = sweep.rows.size();
      sweep.best_model = std::move(trained.model);
    }
    sweep.rows.push_back(row);
  }
  return sweep;
}

json to_json(const KappaSweep& sweep) {
  json rows = json::array();
  for (const auto& r : sweep.rows) {
    rows.push_back({{"kappa", r.kappa},
                    {"shape", stat(r.shape)},
                    {"physics", stat(r.physics)},
                    {"combined", r.combined}});
  }
  return {{"rows", rows}, {"best_kappa", sweep.rows.at(sweep.best).kappa}};
}

json sample_to_json(const Task& task, const TaskSample& sample) {
  return {{"seed", sample.seed},
          {"kind", task.name()},
          {"params", sample.params},
          {"target", points_json(sample.target.positions)},
          {"anchors", points_json(sample.bc.anchors)},
          {"loads", points_json(sample.bc.loads)},
          {"mask", points_json(sample.target.mask)}};
}

void write_dataset_jsonl(std::ostream& out, const Task& task,
                         const std::vector<TaskSample>& samples) {
  for (const auto& s : samples) out << sample_to_json(task, s).dump() << '\n';
}

}  // namespace formfind::harness
