// formfind command line: dataset generation, training, evaluation, direct
// optimization, sweeps and the prediction server.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "formfind/direct_opt.hpp"
#include "formfind/errors.hpp"
#include "formfind/harness/config.hpp"
#include "formfind/harness/experiments.hpp"
#include "formfind/harness/export.hpp"
#include "formfind/harness/report.hpp"
#include "formfind/harness/service.hpp"
#include "formfind/training.hpp"

namespace fs = std::filesystem;
using namespace formfind;
using namespace formfind::harness;

namespace {

// Flags shared by all subcommands; unset flags leave the config file value.
struct Common {
  std::string config_path;
  std::optional<std::string> task;
  std::optional<int> grid;
  std::optional<int> rings;
  std::optional<int> points_per_ring;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> test_seed;
  std::optional<int> test_size;
  std::optional<std::string> out_dir;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file (strict keys)");
    app->add_option("--task", task, "shells or towers");
    app->add_option("--grid", grid, "shell grid side G");
    app->add_option("--rings", rings, "tower ring count D (odd)");
    app->add_option("--points-per-ring", points_per_ring, "tower points per ring k");
    app->add_option("--preset", preset, "desk or full");
    app->add_option("--seed", seed, "training seed");
    app->add_option("--test-seed", test_seed, "held-out seed base");
    app->add_option("--test-size", test_size, "number of held-out targets");
    app->add_option("--out-dir", out_dir, "output directory");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (task) c.task = *task;
    if (grid) c.grid_side = *grid;
    if (rings) c.rings = *rings;
    if (points_per_ring) c.points_per_ring = *points_per_ring;
    if (preset) c.preset = *preset;
    if (seed) c.seed = *seed;
    if (test_seed) c.test_seed = *test_seed;
    if (test_size) c.test_size = *test_size;
    if (out_dir) c.output_dir = *out_dir;
    return parse_config(to_json(c));  // re-validate after overrides
  }
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename T>
std::vector<T> split_numbers(const std::string& s) {
  std::vector<T> out;
  for (const auto& part : split(s)) {
    if constexpr (std::is_integral_v<T>) {
      out.push_back(static_cast<T>(std::stoll(part)));
    } else {
      out.push_back(static_cast<T>(std::stod(part)));
    }
  }
  return out;
}

fs::path output_path(const ExperimentConfig& c, const std::string& name) {
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir) / name;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  std::cerr << "wrote " << path.string() << '\n';
}

void write_obj_file(const fs::path& path, const Topology& topo, const Points& positions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_obj(out, topo, positions);
  std::cerr << "wrote " << path.string() << '\n';
}

void log_progress(const std::string& msg) { std::cerr << msg << '\n'; }

HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Form finding of bar systems with neural force-density amortizers"};
  app.require_subcommand(1);

  // generate
  Common gen_common;
  int gen_count = 100;
  bool gen_train = false;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write target shapes as JSON lines");
  gen_common.attach(gen);
  gen->add_option("--count", gen_count, "number of targets");
  gen->add_flag("--train-seeds", gen_train, "draw from the training seed stream instead of held-out");
  gen->add_option("--out", gen_out, "output file (default <out-dir>/dataset.jsonl)");

  // train
  Common tr_common;
  std::string tr_kind = "ours";
  std::optional<double> tr_kappa;
  std::string tr_out;
  auto* tr = app.add_subcommand("train", "Train ours / nn / pinn and save the model");
  tr_common.attach(tr);
  tr->add_option("--kind", tr_kind, "ours, nn or pinn");
  tr->add_option("--kappa", tr_kappa, "PINN physics weight");
  tr->add_option("--out", tr_out, "model file (default <out-dir>/model_<kind>.json)");

  // eval
  Common ev_common;
  std::string ev_methods;
  std::map<std::string, std::string> ev_models;
  std::string ev_out;
  bool ev_obj = false;
  auto* ev = app.add_subcommand("eval", "Compare methods on held-out targets");
  ev_common.attach(ev);
  ev->add_option("--methods", ev_methods, "comma list of ours,nn,pinn,opt");
  ev->add_option("--model-ours", ev_models["ours"], "model file for ours");
  ev->add_option("--model-nn", ev_models["nn"], "model file for nn");
  ev->add_option("--model-pinn", ev_models["pinn"], "model file for pinn");
  ev->add_option("--out", ev_out, "report file (default <out-dir>/report.json)");
  ev->add_flag("--export-obj", ev_obj, "write <out-dir>/<method>_0.obj for the first target");

  // optimize
  Common op_common;
  std::string op_init;
  std::uint64_t op_target_seed = 0;
  std::string op_model;
  std::string op_trace;
  std::string op_obj;
  auto* op = app.add_subcommand("optimize", "Direct optimization of one held-out target");
  op_common.attach(op);
  op->add_option("--init", op_init, "randomized, expert or warm_start");
  op->add_option("--target-index", op_target_seed, "index into the held-out set");
  op->add_option("--model", op_model, "trained model (warm start)");
  op->add_option("--trace", op_trace, "trace CSV (default <out-dir>/trace.csv)");
  op->add_option("--export-obj", op_obj, "write the optimized bar system as OBJ");

  // sweep-generalization
  Common sg_common;
  std::string sg_deltas;
  std::string sg_ours;
  std::string sg_pinn;
  std::string sg_out;
  auto* sg = app.add_subcommand("sweep-generalization", "Loss versus symmetric/asymmetric blend");
  sg_common.attach(sg);
  sg->add_option("--deltas", sg_deltas, "comma list in [0,1]");
  sg->add_option("--model-ours", sg_ours, "model file for ours")->required();
  sg->add_option("--model-pinn", sg_pinn, "model file for pinn");
  sg->add_option("--out", sg_out, "output file (default <out-dir>/generalization.json)");

  // sweep-scaling
  Common ss_common;
  std::string ss_grids;
  std::string ss_out;
  auto* ss = app.add_subcommand("sweep-scaling", "Train and evaluate ours at several grid sizes");
  ss_common.attach(ss);
  ss->add_option("--grids", ss_grids, "comma list of grid sides");
  ss->add_option("--out", ss_out, "output file (default <out-dir>/scaling.json)");

  // sweep-kappa
  Common sk_common;
  std::string sk_kappas;
  std::string sk_out;
  std::string sk_model;
  auto* sk = app.add_subcommand("sweep-kappa", "Train PINNs over kappa and keep the best");
  sk_common.attach(sk);
  sk->add_option("--kappas", sk_kappas, "comma list of kappa values");
  sk->add_option("--out", sk_out, "output file (default <out-dir>/kappa.json)");
  sk->add_option("--model-out", sk_model, "best model file (default <out-dir>/model_pinn.json)");

  // serve
  std::string sv_shell;
  std::string sv_tower;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  std::size_t sv_workers = 4;
  auto* sv = app.add_subcommand("serve", "HTTP prediction service");
  sv->add_option("--shell-model", sv_shell, "trained shell model");
  sv->add_option("--tower-model", sv_tower, "trained tower model");
  sv->add_option("--host", sv_host, "bind address");
  sv->add_option("--port", sv_port, "port");
  sv->add_option("--workers", sv_workers, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto c = gen_common.resolve();
      const auto task = make_task(c);
      std::vector<TaskSample> samples;
      if (gen_train) {
        std::mt19937_64 rng(c.seed);
        for (int i = 0; i < gen_count; ++i) samples.push_back(task->sample(rng() & ~kHeldOutBit));
      } else {
        samples = held_out_samples(*task, c.test_seed, gen_count);
      }
      const fs::path path = gen_out.empty() ? output_path(c, "dataset.jsonl") : fs::path(gen_out);
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      write_dataset_jsonl(out, *task, samples);
      std::cerr << "wrote " << samples.size() << " targets to " << path.string() << '\n';
    } else if (tr->parsed()) {
      const auto c = tr_common.resolve();
      const auto task = make_task(c);
      const ModelKind kind = model_kind_from_string(tr_kind);
      const TrainConfig tc = train_config(c, *task, kind);
      const int total = tc.total_steps();
      const auto result = train(kind, *task, tc, tr_kappa.value_or(c.kappa), [&](const TrainRecord& r) {
        if (r.step % 100 == 0 || r.step + 1 == total) {
          std::cerr << "step " << r.step << " shape " << r.shape << " physics " << r.physics
                    << " reg " << r.reg << '\n';
        }
      });
      const fs::path path =
          tr_out.empty() ? output_path(c, "model_" + tr_kind + ".json") : fs::path(tr_out);
      save_model(result.model, path.string());
      std::ofstream curve(output_path(c, "curve_" + tr_kind + ".csv"));
      curve << "step,shape,physics,reg,loss\n" << std::setprecision(17);
      for (const auto& r : result.curve) {
        curve << r.step << ',' << r.shape << ',' << r.physics << ',' << r.reg << ',' << r.loss << '\n';
      }
      std::cerr << "wrote " << path.string() << '\n';
    } else if (ev->parsed()) {
      auto c = ev_common.resolve();
      if (!ev_methods.empty()) c.methods = split(ev_methods);
      c = parse_config(to_json(c));
      const auto task = make_task(c);
      std::map<std::string, AmortizerModel> models;
      for (const auto& m : c.methods) {
        if (m == "opt") continue;
        if (ev_models[m].empty()) throw InvalidArgument("method '" + m + "' needs --model-" + m);
        models.emplace(m, load_model(ev_models[m]));
      }
      const auto report = run_eval(c, *task, models, log_progress);
      write_json(ev_out.empty() ? output_path(c, "report.json") : fs::path(ev_out), to_json(report));
      for (const auto& m : report.methods) {
        std::cout << m.method << "  shape " << m.shape().mean << " +- " << m.shape().std
                  << "  physics " << m.physics().mean << " +- " << m.physics().std << "  time_ms "
                  << m.time_ms().mean << " +- " << m.time_ms().std << '\n';
      }
      if (ev_obj) {
        const auto first = held_out_samples(*task, c.test_seed, 1).front();
        for (const auto& [name, model] : models) {
          write_obj_file(output_path(c, name + "_0.obj"), task->topology(),
                         predict(model, *task, first).state.positions);
        }
      }
    } else if (op->parsed()) {
      auto c = op_common.resolve();
      if (!op_init.empty()) c.opt_init = init_strategy_from_string(op_init);
      const auto task = make_task(c);
      const auto samples =
          held_out_samples(*task, c.test_seed, static_cast<int>(op_target_seed) + 1);
      std::optional<AmortizerModel> model;
      if (!op_model.empty()) model = load_model(op_model);
      const OptResult r = optimize_sample(*task, samples.back(), c.opt_init, c.opt, c.opt_seed,
                                          model ? &*model : nullptr);
      const fs::path trace = op_trace.empty() ? output_path(c, "trace.csv") : fs::path(op_trace);
      std::ofstream out(trace);
      write_trace_csv(out, r.trace);
      std::cout << "loss " << r.loss << " iterations " << r.iterations << " status "
                << to_string(r.status) << '\n';
      if (!op_obj.empty()) write_obj_file(op_obj, task->topology(), r.state.positions);
    } else if (sg->parsed()) {
      auto c = sg_common.resolve();
      if (!sg_deltas.empty()) c.deltas = split_numbers<double>(sg_deltas);
      c = parse_config(to_json(c));
      std::map<std::string, AmortizerModel> models;
      models.emplace("ours", load_model(sg_ours));
      if (!sg_pinn.empty()) models.emplace("pinn", load_model(sg_pinn));
      const auto task = make_task(models.at("ours").task);
      const auto* shells = dynamic_cast<const ShellTask*>(task.get());
      if (shells == nullptr) throw InvalidArgument("the generalization sweep runs on shell models");
      const auto rows = sweep_generalization(*shells, models, c.deltas, c.test_size, c.test_seed);
      write_json(sg_out.empty() ? output_path(c, "generalization.json") : fs::path(sg_out),
                 to_json(rows));
    } else if (ss->parsed()) {
      auto c = ss_common.resolve();
      if (!ss_grids.empty()) c.grids = split_numbers<int>(ss_grids);
      c = parse_config(to_json(c));
      const auto rows = sweep_scaling(c, c.grids, log_progress);
      write_json(ss_out.empty() ? output_path(c, "scaling.json") : fs::path(ss_out), to_json(rows));
    } else if (sk->parsed()) {
      auto c = sk_common.resolve();
      if (!sk_kappas.empty()) c.kappas = split_numbers<double>(sk_kappas);
      c = parse_config(to_json(c));
      const auto task = make_task(c);
      const auto sweep = sweep_kappa(c, *task, c.kappas, log_progress);
      write_json(sk_out.empty() ? output_path(c, "kappa.json") : fs::path(sk_out), to_json(sweep));
      const fs::path model_path =
          sk_model.empty() ? output_path(c, "model_pinn.json") : fs::path(sk_model);
      save_model(sweep.best_model, model_path.string());
    } else if (sv->parsed()) {
      std::optional<AmortizerModel> shell;
      std::optional<AmortizerModel> tower;
      if (!sv_shell.empty()) shell = load_model(sv_shell);
      if (!sv_tower.empty()) tower = load_model(sv_tower);
      if (!shell && !tower) throw InvalidArgument("serve needs --shell-model and/or --tower-model");
      const PredictionService service(std::move(shell), std::move(tower));
      HttpServer server(service, sv_workers);
      const int port = server.bind(sv_host, sv_port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << sv_host << ':' << port << '\n';
      server.run();
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
