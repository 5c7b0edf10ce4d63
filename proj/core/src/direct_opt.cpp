#include "formfind/direct_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>

#include "formfind/errors.hpp"
#include "formfind/gradients.hpp"

namespace formfind {

Box Box::from_signs(const Vector& signs, double tau, double q_max) {
  if (!(tau >= 0.0) || !(q_max > tau)) throw InvalidArgument("box needs 0 <= tau < q_max");
  Box box{Vector(signs.size()), Vector(signs.size())};
  for (Eigen::Index i = 0; i < signs.size(); ++i) {
    if (signs(i) < 0) {
      box.lower(i) = -q_max;
      box.upper(i) = -tau;
    } else {
      box.lower(i) = tau;
      box.upper(i) = q_max;
    }
  }
  return box;
}

Vector Box::project(const Vector& q) const { return q.cwiseMax(lower).cwiseMin(upper); }

bool Box::contains(const Vector& q) const {
  return q.size() == lower.size() && (q.array() >= lower.array()).all() &&
         (q.array() <= upper.array()).all();
}

std::string to_string(InitStrategy strategy) {
  switch (strategy) {
    case InitStrategy::randomized:
      return "randomized";
    case InitStrategy::expert:
      return "expert";
    case InitStrategy::warm_start:
      return "warm_start";
  }
  return "randomized";
}

InitStrategy init_strategy_from_string(const std::string& name) {
  if (name == "randomized" || name == "random") return InitStrategy::randomized;
  if (name == "expert") return InitStrategy::expert;
  if (name == "warm_start" || name == "warm-start") return InitStrategy::warm_start;
  throw InvalidArgument("unknown init strategy '" + name + "'");
}

std::string to_string(OptStatus status) {
  switch (status) {
    case OptStatus::gradient_tolerance:
      return "gradient_tolerance";
    case OptStatus::step_tolerance:
      return "step_tolerance";
    case OptStatus::loss_tolerance:
      return "loss_tolerance";
    case OptStatus::max_iterations:
      return "max_iterations";
    case OptStatus::line_search_failed:
      return "line_search_failed";
  }
  return "max_iterations";
}

Vector make_initializer(InitStrategy strategy, const Box& box, const Vector& signs,
                        std::uint64_t seed, const AmortizerModel* model,
                        const Vector* encoder_input) {
  switch (strategy) {
    case InitStrategy::randomized: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Vector q(box.lower.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        q(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
      }
      return q;
    }
    case InitStrategy::expert:
      return box.project(signs);
    case InitStrategy::warm_start:
      if (model == nullptr || encoder_input == nullptr) {
        throw InvalidArgument("warm start needs a trained model and a target");
      }
      return box.project(encode(*model, *encoder_input).values);
  }
  throw InvalidArgument("unknown init strategy");
}

namespace {

double projected_gradient_norm(const Vector& q, const Vector& g, const Box& box) {
  return (box.project(q - g) - q).lpNorm<Eigen::Infinity>();
}

// Variables pinned at a bound with the gradient pushing outward.
std::vector<bool> active_set(const Vector& q, const Vector& g, const Box& box) {
  std::vector<bool> active(static_cast<std::size_t>(q.size()));
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    active[static_cast<std::size_t>(i)] =
        (q(i) <= box.lower(i) && g(i) > 0.0) || (q(i) >= box.upper(i) && g(i) < 0.0);
  }
  return active;
}

// Inverse-Hessian approximation: limited memory (two-loop recursion) when
// memory > 0, dense BFGS otherwise. Directions are restricted to the free
// (inactive) variables.
class QuasiNewton {
 public:
  QuasiNewton(Eigen::Index n, int memory) : n_(n), memory_(memory) {}

  bool empty() const { return updates_ == 0; }

  void reset() {
    pairs_.clear();
    dense_.resize(0, 0);
    updates_ = 0;
  }

  void update(const Vector& s, const Vector& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-10 * s.norm() * y.norm())) return;
    ++updates_;
    if (memory_ > 0) {
      pairs_.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
      return;
    }
    if (dense_.size() == 0) dense_ = Matrix::Identity(n_, n_) * (sy / y.squaredNorm());
    const double rho = 1.0 / sy;
    const Vector hy = dense_ * y;
    dense_ += rho * ((1.0 + rho * y.dot(hy)) * s * s.transpose() - hy * s.transpose() -
                     s * hy.transpose());
  }

  Vector direction(const Vector& g, const std::vector<bool>& active) const {
    auto mask = [&](Vector v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (active[static_cast<std::size_t>(i)]) v(i) = 0.0;
      }
      return v;
    };
    if (memory_ == 0) {
      if (dense_.size() == 0) return -mask(g);
      return -mask(dense_ * mask(g));
    }
    Vector d = mask(g);
    std::vector<double> alpha(pairs_.size());
    for (std::size_t k = pairs_.size(); k-- > 0;) {
      alpha[k] = pairs_[k].rho * pairs_[k].s.dot(d);
      d -= alpha[k] * mask(pairs_[k].y);
    }
    if (!pairs_.empty()) {
      const auto& last = pairs_.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const double beta = pairs_[k].rho * mask(pairs_[k].y).dot(d);
      d += (alpha[k] - beta) * mask(pairs_[k].s);
    }
    return -mask(d);
  }

 private:
  struct Pair {
    Vector s;
    Vector y;
    double rho;
  };
  Eigen::Index n_;
  int memory_;
  int updates_ = 0;
  std::deque<Pair> pairs_;
  Matrix dense_;
};

}  // namespace

OptResult optimize(const Topology& topology, const BoundaryConditions& bc,
                   const ShapeTarget& target, const Vector& signs, double tau, double p,
                   const Vector& q0, const OptConfig& config) {
  if (config.max_iters < 0 || !(config.tolerance > 0.0) || config.memory < 0) {
    throw InvalidArgument("invalid optimizer configuration");
  }
  const Box box = Box::from_signs(signs, tau, config.q_max);
  if (q0.size() != signs.size()) throw InvalidArgument("initial q has the wrong length");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  OptResult result;
  auto evaluate = [&](const Vector& q) -> std::optional<ValueAndGradient> {
    ++result.evaluations;
    try {
      auto vg = shape_objective(topology, bc, target, p, q);
      if (!std::isfinite(vg.value) || !vg.gradient.allFinite()) return std::nullopt;
      return vg;
    } catch (const SingularSystemError&) {
      return std::nullopt;
    } catch (const DegenerateGeometryError&) {
      return std::nullopt;
    }
  };

  Vector q = box.project(q0);
  ValueAndGradient current = shape_objective(topology, bc, target, p, q);
  ++result.evaluations;
  double pg = projected_gradient_norm(q, current.gradient, box);
  result.trace.push_back({0, elapsed(), current.value, pg});

  QuasiNewton pairs(q.size(), config.memory);
  OptStatus status = OptStatus::max_iterations;
  int stall = 0;
  bool restarted = false;
  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    if (pg <= config.tolerance) {
      status = OptStatus::gradient_tolerance;
      break;
    }
    const auto active = active_set(q, current.gradient, box);
    Vector d = pairs.direction(current.gradient, active);
    if (!(d.dot(current.gradient) < 0.0)) pairs.reset();
    // Without curvature information, step along P(q - g) - q: components
    // pushing towards a nearby bound are capped at the distance to it, so bars
    // close to q = 0 cannot dominate the direction.
    if (pairs.empty()) d = box.project(q - current.gradient) - q;
    // Drop components that would leave the box immediately.
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if ((q(i) <= box.lower(i) && d(i) < 0.0) || (q(i) >= box.upper(i) && d(i) > 0.0)) d(i) = 0.0;
    }
    const double gd = current.gradient.dot(d);
    if (!(gd < 0.0)) {
      if (!pairs.empty()) {
        pairs.reset();
        --iter;
        continue;
      }
      status = OptStatus::gradient_tolerance;
      break;
    }
    // First step (no curvature yet) is scaled to move at most one unit.
    double t = pairs.empty() ? 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1.0) : 1.0;

    // Weak Wolfe bracketing (sufficient decrease + curvature). The curvature
    // condition keeps s'y > 0, which matters on the kinks of the l1 loss.
    std::optional<ValueAndGradient> trial;
    std::optional<ValueAndGradient> fallback;
    Vector q_trial;
    Vector q_fallback;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool accepted = false;
    // Tests use the projected step, so they reduce to the usual ones away from
    // the bounds.
    for (int k = 0; k < config.max_backtracks; ++k) {
      q_trial = box.project(q + t * d);
      const Vector step = q_trial - q;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      const double slope = current.gradient.dot(step);
      trial = evaluate(q_trial);
      if (!trial || !(slope < 0.0) || trial->value > current.value + 1e-4 * slope) {
        hi = t;
      } else if (trial->gradient.dot(step) < 0.9 * slope) {
        lo = t;
        fallback = std::move(trial);
        q_fallback = q_trial;
      } else {
        accepted = true;
        break;
      }
      t = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * t;
    }
    if (!accepted && fallback) {
      trial = std::move(fallback);
      q_trial = q_fallback;
      accepted = true;
    }
    if (!accepted) {
      if (!pairs.empty()) {
        pairs.reset();
        --iter;  // retry this iteration along the projected steepest descent
        continue;
      }
      status = OptStatus::line_search_failed;
      break;
    }

    const Vector s = q_trial - q;
    const Vector y = trial->gradient - current.gradient;
    pairs.update(s, y);
    const double previous = current.value;
    q = q_trial;
    current = std::move(*trial);
    pg = projected_gradient_norm(q, current.gradient, box);
    result.trace.push_back({iter + 1, elapsed(), current.value, pg});

    if (s.lpNorm<Eigen::Infinity>() <= config.tolerance) {
      // A tiny quasi-Newton step on a kink of the l1 loss is not convergence
      // yet: retry from projected steepest descent before stopping.
      if (!restarted) {
        restarted = true;
        pairs.reset();
        continue;
      }
      status = OptStatus::step_tolerance;
      ++iter;
      break;
    }
    restarted = false;
    const bool stalled = previous - current.value <=
                         config.tolerance * std::max({std::abs(previous), std::abs(current.value), 1.0});
    stall = stalled ? stall + 1 : 0;
    if (config.stall_iters > 0 && stall >= config.stall_iters) {
      status = OptStatus::loss_tolerance;
      ++iter;
      break;
    }
  }

  // Sufficient-decrease acceptance makes the accepted losses non-increasing, so the last
  // accepted iterate is the best one.
  result.q = q;
  result.loss = current.value;
  result.state = std::move(current.state);
  result.status = status;
  result.iterations = iter;
  return result;
}

OptResult optimize_sample(const Task& task, const TaskSample& sample, InitStrategy strategy,
                          const OptConfig& config, std::uint64_t seed,
                          const AmortizerModel* model) {
  const Box box = Box::from_signs(task.signs(), task.shift(), config.q_max);
  const Vector q0 =
      make_initializer(strategy, box, task.signs(), seed, model, &sample.encoder_input);
  return optimize(task.topology(), sample.bc, sample.target, task.signs(), task.shift(),
                  task.p(), q0, config);
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
  out << "iteration,elapsed_ms,loss,grad_norm\n";
  out << std::setprecision(17);
  for (const auto& t : trace) {
    out << t.iteration << ',' << t.elapsed_ms << ',' << t.loss << ',' << t.grad_norm << '\n';
  }
}

}  // namespace formfind
