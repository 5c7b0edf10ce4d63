#include <benchmark/benchmark.h>

#include "formfind/amortizer.hpp"
#include "formfind/direct_opt.hpp"
#include "formfind/fdm.hpp"
#include "formfind/gradients.hpp"
#include "formfind/losses.hpp"
#include "formfind/task.hpp"

using namespace formfind;

namespace {

Vector shell_q(const ShellTask& task) { return Vector::Constant(task.topology().num_bars(), -1.5); }

void BM_ShellSolve(benchmark::State& state) {
  const ShellTask task(static_cast<int>(state.range(0)));
  const auto sample = task.sample(1);
  const Vector q = shell_q(task);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_equilibrium(task.topology(), q, sample.bc));
  }
  state.counters["free_nodes"] = task.topology().num_free();
}
BENCHMARK(BM_ShellSolve)->Arg(6)->Arg(10)->Arg(16)->Arg(23)->Unit(benchmark::kMicrosecond);

void BM_TowerSolve(benchmark::State& state) {
  const TowerTask task(static_cast<int>(state.range(0)), 16);
  const auto sample = task.sample(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_equilibrium(task.topology(), task.signs(), sample.bc));
  }
}
BENCHMARK(BM_TowerSolve)->Arg(11)->Arg(21)->Unit(benchmark::kMicrosecond);

// Forward solve plus the adjoint pass for the shape loss.
void BM_ShellValueAndGradient(benchmark::State& state) {
  const ShellTask task(static_cast<int>(state.range(0)));
  const auto sample = task.sample(1);
  const Vector q = shell_q(task);
  for (auto _ : state) {
    benchmark::DoNotOptimize(shape_objective(task.topology(), sample.bc, sample.target, task.p(), q));
  }
}
BENCHMARK(BM_ShellValueAndGradient)->Arg(10)->Arg(23)->Unit(benchmark::kMicrosecond);

void BM_Encode(benchmark::State& state) {
  const ShellTask task(static_cast<int>(state.range(0)));
  const auto model = init_model(ModelKind::ours, task, {256, 2}, 0);
  const auto sample = task.sample(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(model, sample.encoder_input));
  }
}
BENCHMARK(BM_Encode)->Arg(10)->Arg(23)->Unit(benchmark::kMicrosecond);

void BM_Predict(benchmark::State& state) {
  const ShellTask task(static_cast<int>(state.range(0)));
  const auto model = init_model(ModelKind::ours, task, {256, 2}, 0);
  const auto sample = task.sample(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict(model, task, sample));
  }
}
BENCHMARK(BM_Predict)->Arg(10)->Arg(23)->Unit(benchmark::kMicrosecond);

void BM_DirectOptShell(benchmark::State& state) {
  const ShellTask task(6);
  const auto sample = task.sample(1);
  OptConfig config;
  config.max_iters = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize_sample(task, sample, InitStrategy::expert, config));
  }
}
BENCHMARK(BM_DirectOptShell)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro's libbenchmark_main.a carries LTO bytecode from another GCC.
BENCHMARK_MAIN();
