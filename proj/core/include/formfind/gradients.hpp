#pragma once

#include <functional>

#include "formfind/fdm.hpp"
#include "formfind/losses.hpp"

namespace formfind {

/// Reverse-mode derivative of a scalar objective through the equilibrium
/// solve: given d obj / d X_u, returns d obj / d q.
///
/// Adjoint route: solve K_uu^T L = cotangent with the forward factorization,
/// then for bar m joining a and b,
///   d obj / d q_m = -(l_a - l_b) . (x_a - x_b)
/// where l is zero at anchors.
Vector vjp_solve_wrt_q(const EquilibriumSystem& system, const EquilibriumState& state,
                       const Points& free_cotangent);

using ScalarObjective = std::function<double(const Vector&)>;

/// Central differences per coordinate. Objective failures at a perturbed
/// point are rethrown as InvalidArgument naming the coordinate.
Vector finite_difference_gradient(const ScalarObjective& objective, const Vector& q, double eps);

/// max_m |a_m - b_m| / max(max_m |b_m|, floor)
double max_relative_error(const Vector& analytic, const Vector& reference, double floor = 1e-8);

struct ValueAndGradient {
  double value = 0.0;
  Vector gradient;
  EquilibriumState state;
};

/// Shape loss of the equilibrium shape X(q) and its gradient with respect to q.
ValueAndGradient shape_objective(const Topology& topology, const BoundaryConditions& bc,
                                 const ShapeTarget& target, double p, const Vector& q);

}  // namespace formfind
