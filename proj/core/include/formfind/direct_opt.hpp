#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "formfind/amortizer.hpp"
#include "formfind/fdm.hpp"
#include "formfind/losses.hpp"
#include "formfind/task.hpp"

namespace formfind {

/// Per-bar bounds on q. Built from the sign pattern so that compression bars
/// live in [-q_max, -tau] and tension bars in [tau, q_max].
struct Box {
  Vector lower;
  Vector upper;

  static Box from_signs(const Vector& signs, double tau, double q_max = 20.0);
  Vector project(const Vector& q) const;
  bool contains(const Vector& q) const;
};

enum class InitStrategy { randomized, expert, warm_start };

std::string to_string(InitStrategy strategy);
InitStrategy init_strategy_from_string(const std::string& name);

/// randomized: uniform inside the box. expert: s * 1 clamped into the box.
/// warm_start: encode(model, input) clamped into the box (model and input
/// required).
Vector make_initializer(InitStrategy strategy, const Box& box, const Vector& signs,
                        std::uint64_t seed = 0, const AmortizerModel* model = nullptr,
                        const Vector* encoder_input = nullptr);

struct OptConfig {
  int max_iters = 5000;
  double tolerance = 1e-6;
  double q_max = 20.0;
  int memory = 0;  // L-BFGS correction pairs; 0 selects dense BFGS
  int max_backtracks = 50;  // trial evaluations per line search
  /// Stop after this many consecutive iterations whose relative loss decrease
  /// is below the tolerance (0 disables the test).
  int stall_iters = 0;
};

struct TracePoint {
  int iteration = 0;
  double elapsed_ms = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;  // infinity norm of the projected gradient
};

enum class OptStatus { gradient_tolerance, step_tolerance, loss_tolerance, max_iterations,
                       line_search_failed };

std::string to_string(OptStatus status);

struct OptResult {
  Vector q;  // best iterate
  EquilibriumState state;
  double loss = 0.0;
  std::vector<TracePoint> trace;  // one row per accepted iterate, starting at q0
  OptStatus status = OptStatus::max_iterations;
  int iterations = 0;
  int evaluations = 0;
};

/// Projected L-BFGS with Armijo backtracking on the box. A singular system or
/// a zero-length bar at a trial point counts as a failed trial and halves the
/// step. Stops when the
/// projected gradient, the step, or the relative loss decrease falls below the
/// tolerance, or after max_iters. Throws SingularSystemError if q0 itself is
/// singular.
OptResult optimize(const Topology& topology, const BoundaryConditions& bc,
                   const ShapeTarget& target, const Vector& signs, double tau, double p,
                   const Vector& q0, const OptConfig& config = {});

/// Convenience wrapper using the task's topology, signs, shift and exponent.
OptResult optimize_sample(const Task& task, const TaskSample& sample, InitStrategy strategy,
                          const OptConfig& config = {}, std::uint64_t seed = 0,
                          const AmortizerModel* model = nullptr);

/// Header `iteration,elapsed_ms,loss,grad_norm` followed by one row per point.
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

}  // namespace formfind
