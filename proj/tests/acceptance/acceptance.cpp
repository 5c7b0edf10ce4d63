// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Progress and diagnostics go to
// stderr so that stdout stays one line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "formfind/amortizer.hpp"
#include "formfind/datagen.hpp"
#include "formfind/direct_opt.hpp"
#include "formfind/fdm.hpp"
#include "formfind/gradients.hpp"
#include "formfind/harness/config.hpp"
#include "formfind/harness/experiments.hpp"
#include "formfind/losses.hpp"
#include "formfind/task.hpp"
#include "formfind/training.hpp"

using namespace formfind;
using namespace formfind::harness;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void note(const std::string& msg) { std::cerr << "  " << msg << std::endl; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

double scale_of(const BoundaryConditions& bc) { return std::max(1.0, bc.loads.norm()); }

// Residual K X - P on free rows, accumulated bar by bar without touching the
// solver's assembly.
double independent_residual(const Topology& topo, const Vector& q, const Points& x,
                            const Points& loads) {
  Points r = -loads;
  const auto bars = topo.bars();
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const auto& b = bars[m];
    const Eigen::RowVector3d f = q[static_cast<Eigen::Index>(m)] * (x.row(b.a) - x.row(b.b));
    r.row(b.a) += f;
    r.row(b.b) -= f;
  }
  double sq = 0.0;
  for (int i = 0; i < topo.num_nodes(); ++i) {
    if (topo.free_slot(i) >= 0) sq += r.row(i).squaredNorm();
  }
  return std::sqrt(sq);
}

Vector uniform(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// ---------------------------------------------------------------------------

Verdict solver_closed_form() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int neighbours = 2 + trial % 5;
    std::vector<Bar> bars;
    std::vector<int> fixed;
    for (int j = 1; j <= neighbours; ++j) {
      bars.push_back({0, j});
      fixed.push_back(j);
    }
    const Topology topo(neighbours + 1, bars, fixed);
    const Vector q = uniform(rng, neighbours, 0.1, 10.0);
    Points anchors(neighbours, 3);
    for (int j = 0; j < neighbours; ++j) anchors.row(j) = uniform(rng, 3, -5.0, 5.0).transpose();
    Points loads = Points::Zero(neighbours + 1, 3);
    loads.row(0) = uniform(rng, 3, -2.0, 2.0).transpose();

    const auto state = solve_equilibrium(topo, q, {anchors, loads});
    Eigen::RowVector3d expected = loads.row(0);
    for (int j = 0; j < neighbours; ++j) expected += q[j] * anchors.row(j);
    expected /= q.sum();
    worst = std::max(worst, (state.positions.row(0) - expected).cwiseAbs().maxCoeff());
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-12 && s < 1.0, "max abs error " + fmt(worst) + " over 200 stars, " + fmt(s) + " s"};
}

Verdict equilibrium_guarantee() {
  std::mt19937_64 rng(12);
  const ShellTask shells(10);
  const TowerTask towers(21, 16);
  double worst = 0.0;  // residual / scale, max over both families
  for (int i = 0; i < 100; ++i) {
    const auto sample = shells.sample(rng() & ~kHeldOutBit);
    const Vector q = uniform(rng, shells.topology().num_bars(), -10.0, -0.1);
    const auto state = solve_equilibrium(shells.topology(), q, sample.bc);
    const double s = scale_of(sample.bc);
    worst = std::max({worst, physics_loss(state.residuals) / s,
                      independent_residual(shells.topology(), q, state.positions, sample.bc.loads) / s});
  }
  for (int i = 0; i < 100; ++i) {
    const auto sample = towers.sample(rng() & ~kHeldOutBit);
    const Vector q =
        towers.signs().cwiseProduct(uniform(rng, towers.topology().num_bars(), towers.shift(), 20.0));
    const auto state = solve_equilibrium(towers.topology(), q, sample.bc);
    const double s = scale_of(sample.bc);
    worst = std::max({worst, physics_loss(state.residuals) / s,
                      independent_residual(towers.topology(), q, state.positions, sample.bc.loads) / s});
  }
  return {worst <= 1e-9, "max ||R||_F / max(1, ||P||_F) = " + fmt(worst) + " over 100 shells + 100 towers"};
}

Verdict fdm_properties() {
  std::mt19937_64 rng(13);
  const ShellTask task(8);
  const Topology& topo = task.topology();
  double translation = 0.0, scaling = 0.0, planarity = 0.0, row_sum = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto sample = task.sample(rng() & ~kHeldOutBit);
    const Vector q = uniform(rng, topo.num_bars(), -10.0, -0.1);
    const auto base = solve_equilibrium(topo, q, sample.bc);

    const Eigen::RowVector3d shift = uniform(rng, 3, -50.0, 50.0).transpose();
    BoundaryConditions moved = sample.bc;
    moved.anchors.rowwise() += shift;
    const auto shifted = solve_equilibrium(topo, q, moved);
    translation = std::max(translation, ((shifted.positions.rowwise() - shift) - base.positions).cwiseAbs().maxCoeff());

    const double c = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    BoundaryConditions heavier = sample.bc;
    heavier.loads *= c;
    const auto scaled = solve_equilibrium(topo, c * q, heavier);
    scaling = std::max(scaling, (scaled.positions - base.positions).cwiseAbs().maxCoeff());

    BoundaryConditions planar{sample.bc.anchors, Points::Zero(topo.num_nodes(), 3)};
    planar.anchors.col(2).setConstant(0.0);
    const auto flat = solve_equilibrium(topo, q, planar);
    planarity = std::max(planarity, flat.positions.col(2).cwiseAbs().maxCoeff());

    // Dyadic force densities make every partial sum exact.
    Vector dyadic(topo.num_bars());
    for (auto& v : dyadic) v = -std::ldexp(static_cast<double>(1 + rng() % 64), -3);
    row_sum = std::max(row_sum, assemble_full_stiffness(topo, dyadic).rowwise().sum().cwiseAbs().maxCoeff());
  }
  const bool pass = translation <= 1e-9 && scaling <= 1e-9 && planarity <= 1e-12 && row_sum == 0.0;
  return {pass, "translation " + fmt(translation) + ", joint scaling " + fmt(scaling) + ", planarity " +
                    fmt(planarity) + ", row sum " + fmt(row_sum)};
}

Verdict gradient_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(14);
  const ShellTask shells(6);
  const TowerTask towers(5, 8);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const Task& task = c % 2 == 0 ? static_cast<const Task&>(shells) : towers;
    const auto sample = task.sample(rng() & ~kHeldOutBit);
    const Eigen::Index m = task.topology().num_bars();
    const Vector q = c % 2 == 0 ? uniform(rng, m, -5.0, -0.5)
                                : Vector(task.signs().cwiseProduct(uniform(rng, m, 1.0, 5.0)));
    const auto analytic = shape_objective(task.topology(), sample.bc, sample.target, task.p(), q);
    const double eps = 1e-6;
    Vector fd(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Vector hi = q, lo = q;
      hi[k] += eps;
      lo[k] -= eps;
      const double f_hi = shape_loss(solve_equilibrium(task.topology(), hi, sample.bc).positions, sample.target, task.p());
      const double f_lo = shape_loss(solve_equilibrium(task.topology(), lo, sample.bc).positions, sample.target, task.p());
      fd[k] = (f_hi - f_lo) / (2.0 * eps);
    }
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (analytic.gradient - fd).cwiseAbs().maxCoeff() / scale);
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-5 && s < 30.0,
          "max relative error " + fmt(worst) + " over 20 configurations, " + fmt(s) + " s"};
}

// Hand-written translation bounds of the positive-quadrant control classes
// (plan width w): the apex moves up, the edge midpoints slide along their edge
// or rise, corners stay put.
bool within_class_bounds(const BezierControlGrid& grid, double w) {
  struct B3 {
    Vec3 lo, hi;
  };
  const auto bounds = [w](int qe, int qg) -> B3 {
    if (qe == 2 && qg == 2) return {{0, 0, w / 10}, {0, 0, w}};
    if (qe == 3 && qg == 2) return {{-w / 2, 0, 0}, {w / 2, 0, w / 2}};
    if (qe == 2 && qg == 3) return {{0, -w / 2, 0}, {0, w / 2, 0}};
    return {{0, 0, 0}, {0, 0, 0}};
  };
  const auto ref = [w](int i) { return (-0.5 + i / 3.0) * w; };
  for (int e = 0; e < 4; ++e) {
    for (int g = 0; g < 4; ++g) {
      const Vec3 p = grid.at(e, g);
      Vec3 t(p.x() - ref(e), p.y() - ref(g), p.z());
      if (e < 2) t.x() = -t.x();
      if (g < 2) t.y() = -t.y();
      const B3 b = bounds(e < 2 ? 3 - e : e, g < 2 ? 3 - g : g);
      for (int d = 0; d < 3; ++d) {
        if (t[d] < b.lo[d] - 1e-12 || t[d] > b.hi[d] + 1e-12) return false;
      }
    }
  }
  return true;
}

Verdict data_generators() {
  double unity = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const auto b = bernstein3(i / 10000.0);
    unity = std::max(unity, std::abs(b[0] + b[1] + b[2] + b[3] - 1.0));
  }
  const double w = 10.0;
  int bound_violations = 0;
  double mirror = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto sym = sample_symmetric_controls(seed, w);
    if (!within_class_bounds(sym, w)) ++bound_violations;
    if (!within_class_bounds(sample_asymmetric_controls(seed, w), w)) ++bound_violations;
    // Mirror pairs compared coordinate by coordinate, independent of the
    // library's symmetry measure.
    for (int e = 0; e < 4; ++e) {
      for (int g = 0; g < 4; ++g) {
        const Vec3 a = sym.at(e, g);
        const Vec3 bx = sym.at(3 - e, g);
        const Vec3 by = sym.at(e, 3 - g);
        mirror = std::max({mirror, std::abs(a.x() + bx.x()), std::abs(a.y() - bx.y()), std::abs(a.z() - bx.z()),
                           std::abs(a.x() - by.x()), std::abs(a.y() + by.y()), std::abs(a.z() - by.z())});
      }
    }
  }
  int range_violations = 0;
  const TowerParams shape;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = sample_tower_params(seed, shape);
    for (const RingEllipse& r : {p.bottom, p.middle, p.top}) {
      const bool ok = r.alpha1 >= 0.5 && r.alpha1 < 1.5 && r.alpha2 >= 0.5 && r.alpha2 < 1.5 &&
                      r.beta >= -std::acos(-1.0) / 12 && r.beta < std::acos(-1.0) / 12;
      if (!ok) ++range_violations;
    }
  }
  const bool pass = unity <= 1e-12 && bound_violations == 0 && mirror == 0.0 && range_violations == 0;
  return {pass, "partition of unity " + fmt(unity) + ", bound violations " + std::to_string(bound_violations) +
                    "/2000, mirror error " + fmt(mirror) + ", tower range violations " +
                    std::to_string(range_violations) + "/3000"};
}

// ---------------------------------------------------------------------------
// Shells: trained models and direct optimization shared by several criteria.

struct ShellRun {
  std::unique_ptr<ShellTask> task;
  std::vector<TaskSample> test;
  std::map<std::string, AmortizerModel> models;
  std::map<std::string, MethodReport> reports;
  OptOutcome opt;
};

constexpr int kShellGrid = 10;
constexpr std::uint64_t kShellTestBase = 7;
constexpr std::uint64_t kOptSeed = 100;

ShellRun run_shells() {
  ShellRun run;
  run.task = std::make_unique<ShellTask>(kShellGrid);
  run.test = held_out_samples(*run.task, kShellTestBase, 100);
  for (ModelKind kind : {ModelKind::ours, ModelKind::nn, ModelKind::pinn}) {
    auto config = TrainConfig::full(*run.task, kind);
    config.seed = 1;
    const auto t0 = Clock::now();
    auto trained = train(kind, *run.task, config, 1.0);
    note("shells " + to_string(kind) + ": trained " + std::to_string(config.total_steps()) + " steps in " +
         fmt(seconds_since(t0)) + " s");
    run.reports[to_string(kind)] = evaluate_model(to_string(kind), trained.model, *run.task, run.test, 5);
    run.models[to_string(kind)] = std::move(trained.model);
  }
  const auto t0 = Clock::now();
  run.opt = evaluate_optimizer("opt", *run.task, run.test, InitStrategy::randomized, OptConfig{}, kOptSeed);
  note("shells opt: 100 targets in " + fmt(seconds_since(t0)) + " s");
  for (const auto& [name, rep] : run.reports) {
    note(name + ": shape " + fmt(rep.shape().mean) + " +- " + fmt(rep.shape().std) + ", physics " +
         fmt(rep.physics().mean) + ", " + fmt(rep.time_ms().mean) + " ms");
  }
  return run;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict direct_optimization(const ShellRun& run) {
  double shape = 0.0, physics = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto& rec = run.opt.report.records[static_cast<std::size_t>(i)];
    shape += rec.shape / 10.0;
    physics = std::max(physics, rec.physics / scale_of(run.test[static_cast<std::size_t>(i)].bc));
  }
  std::vector<double> all;
  for (const auto& r : run.opt.report.records) all.push_back(r.shape);
  note("opt over all 100 targets: mean " + fmt(run.opt.report.shape().mean) + ", median " + fmt(median(all)));
  return {shape <= 2.0 && physics <= 1e-9,
          "G=10, first 10 held-out targets: mean L_shape " + fmt(shape) + ", max L_physics/scale " + fmt(physics)};
}

Verdict amortization(const ShellRun& run) {
  const auto& ours = run.reports.at("ours");
  double physics = 0.0;
  for (std::size_t i = 0; i < run.test.size(); ++i) {
    physics = std::max(physics, ours.records[i].physics / scale_of(run.test[i].bc));
  }
  const double ratio = ours.shape().mean / run.opt.report.shape().mean;
  const double speedup = run.opt.report.time_ms().mean / ours.time_ms().mean;
  std::vector<double> opt_shapes;
  for (const auto& r : run.opt.report.records) opt_shapes.push_back(r.shape);
  return {physics <= 1e-9 && ratio <= 2.0 && speedup >= 100.0,
          "max L_physics/scale " + fmt(physics) + ", mean L_shape ours " + fmt(ours.shape().mean) + " vs opt " +
              fmt(run.opt.report.shape().mean) + " (median " + fmt(median(opt_shapes)) + "), ratio " + fmt(ratio) +
              ", speedup " + fmt(speedup) + "x"};
}

Verdict generalization(const ShellRun& run) {
  const auto rows = sweep_generalization(*run.task, {{"ours", run.models.at("ours")}, {"pinn", run.models.at("pinn")}},
                                         {0.0, 0.5, 1.0}, 20, 11);
  std::ostringstream detail;
  for (const auto& row : rows) {
    detail << "delta " << row.delta << ": ours " << fmt(row.shape.at("ours").mean) << " / pinn "
           << fmt(row.shape.at("pinn").mean) << "; ";
  }
  // The sweep reports means; the per-target bound is checked on the same
  // targets (symmetric seeds from base 11, asymmetric from base 12).
  double worst = 0.0;
  const auto sym = held_out_seeds(11, 20);
  const auto asym = held_out_seeds(12, 20);
  for (double delta : {0.0, 0.5, 1.0}) {
    for (std::size_t i = 0; i < 20; ++i) {
      const auto s = run.task->sample_interpolated(sym[i], asym[i], delta);
      const auto p = predict(run.models.at("ours"), *run.task, s);
      worst = std::max(worst, physics_loss(p.state.residuals) / scale_of(s.bc));
    }
  }
  bool pass = true;
  pass = pass && worst <= 1e-9 && rows.back().shape.at("ours").mean < rows.back().shape.at("pinn").mean;
  detail << "max ours physics/scale " << fmt(worst) << ", 20 targets per delta";
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// Towers.

struct TowerRun {
  std::unique_ptr<TowerTask> task;
  std::vector<TaskSample> test;
  std::map<std::string, AmortizerModel> models;
  std::map<std::string, MethodReport> reports;
};

TowerRun run_towers() {
  TowerRun run;
  run.task = std::make_unique<TowerTask>(21, 16);
  run.test = held_out_samples(*run.task, 21, 10);
  for (ModelKind kind : {ModelKind::ours, ModelKind::nn, ModelKind::pinn}) {
    auto config = TrainConfig::full(*run.task, kind);
    config.seed = 1;
    const auto t0 = Clock::now();
    auto trained = train(kind, *run.task, config, 1.0);
    note("towers " + to_string(kind) + ": trained " + std::to_string(config.total_steps()) + " steps in " +
         fmt(seconds_since(t0)) + " s");
    run.reports[to_string(kind)] = evaluate_model(to_string(kind), trained.model, *run.task, run.test, 3);
    note("towers " + to_string(kind) + ": shape " + fmt(run.reports[to_string(kind)].shape().mean) + ", physics " +
         fmt(run.reports[to_string(kind)].physics().mean));
    run.models[to_string(kind)] = std::move(trained.model);
  }
  return run;
}

constexpr int kWarmStartBudget = 50;

Verdict tower_warm_start(const TowerRun& run, double* opt_physics) {
  int wins = 0;
  *opt_physics = 0.0;
  for (int budget : {10, 25, kWarmStartBudget, 100, 200}) {
    OptConfig config;
    config.max_iters = budget;
    int budget_wins = 0;
    double warm_mean = 0.0, expert_mean = 0.0;
    for (const auto& s : run.test) {
      const auto warm = optimize_sample(*run.task, s, InitStrategy::warm_start, config, 0, &run.models.at("ours"));
      const auto expert = optimize_sample(*run.task, s, InitStrategy::expert, config);
      if (warm.loss <= expert.loss) ++budget_wins;
      warm_mean += warm.loss / 10.0;
      expert_mean += expert.loss / 10.0;
      *opt_physics = std::max({*opt_physics, physics_loss(warm.state.residuals) / scale_of(s.bc),
                               physics_loss(expert.state.residuals) / scale_of(s.bc)});
    }
    note("towers budget " + std::to_string(budget) + ": warm start <= expert on " + std::to_string(budget_wins) +
         "/10, mean " + fmt(warm_mean) + " vs " + fmt(expert_mean));
    if (budget == kWarmStartBudget) wins = budget_wins;
  }
  return {wins >= 7, "D=21, k=16, " + std::to_string(kWarmStartBudget) + " iterations: warm start <= expert on " +
                         std::to_string(wins) + "/10 targets"};
}

Verdict baseline_ordering(const ShellRun& shells, const TowerRun& towers, double tower_opt_physics) {
  bool pass = true;
  std::ostringstream detail;
  const auto check = [&](const std::string& name, const std::map<std::string, MethodReport>& reports,
                         const std::vector<TaskSample>& test, double opt_physics) {
    const double nn = reports.at("nn").physics().mean;
    const double pinn = reports.at("pinn").physics().mean;
    double ours = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      ours = std::max(ours, reports.at("ours").records[i].physics / scale_of(test[i].bc));
    }
    pass = pass && nn > 0.1 && pinn > 0.1 && pinn < nn && ours <= 1e-9 && opt_physics <= 1e-9;
    detail << name << ": nn " << fmt(nn) << ", pinn " << fmt(pinn) << ", ours " << fmt(ours) << ", opt "
           << fmt(opt_physics) << "; ";
  };
  double shell_opt = 0.0;
  for (std::size_t i = 0; i < shells.test.size(); ++i) {
    shell_opt = std::max(shell_opt, shells.opt.report.records[i].physics / scale_of(shells.test[i].bc));
  }
  check("shells", shells.reports, shells.test, shell_opt);
  check("towers", towers.reports, towers.test, tower_opt_physics);
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------

Verdict scaling() {
  ExperimentConfig config;
  config.preset = "desk";
  config.seed = 1;
  config.test_seed = kShellTestBase;
  config.test_size = 100;
  const auto rows = sweep_scaling(config, {10, 16, 23}, [](const std::string& m) { note(m); });
  const double base = rows.front().shape_per_node.mean;
  bool pass = true;
  std::ostringstream detail;
  for (const auto& r : rows) {
    const double rel = r.shape_per_node.mean / base;
    pass = pass && rel >= 0.5 && rel <= 2.0 && r.physics.mean <= 1e-9;
    detail << "G=" << r.grid_side << " shape/N " << fmt(r.shape_per_node.mean) << " (x" << fmt(rel) << ", "
           << fmt(r.inference_ms.mean) << " ms); ";
    note("G=" + std::to_string(r.grid_side) + " trained in " + fmt(r.train_seconds) + " s");
  }
  const double g23_ms = rows.back().inference_ms.mean + rows.back().inference_ms.std;
  pass = pass && g23_ms < 50.0;
  detail << "G=23 inference mean+std " << fmt(g23_ms) << " ms";
  return {pass, detail.str()};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](const std::string& name, const std::function<Verdict()>& body) {
    std::cerr << "[" << name << "]" << std::endl;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << " [" << fmt(seconds_since(t0))
              << " s]" << std::endl;
  };

  report("solver-closed-form", solver_closed_form);
  report("equilibrium-guarantee", equilibrium_guarantee);
  report("fdm-properties", fdm_properties);
  report("gradient-fidelity", gradient_fidelity);
  report("data-generators", data_generators);

  std::cerr << "[training shells models]" << std::endl;
  const ShellRun shells = run_shells();
  report("direct-optimization", [&] { return direct_optimization(shells); });
  report("amortization", [&] { return amortization(shells); });
  report("generalization", [&] { return generalization(shells); });

  std::cerr << "[training towers models]" << std::endl;
  const TowerRun towers = run_towers();
  double tower_opt_physics = 0.0;
  report("tower-warm-start", [&] { return tower_warm_start(towers, &tower_opt_physics); });
  report("baseline-ordering", [&] { return baseline_ordering(shells, towers, tower_opt_physics); });
  report("scaling", scaling);

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
