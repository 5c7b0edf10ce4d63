#include "formfind/gradients.hpp"

#include <algorithm>
#include <exception>
#include <string>

#include "formfind/errors.hpp"

namespace formfind {

Vector vjp_solve_wrt_q(const EquilibriumSystem& system, const EquilibriumState& state,
                       const Points& free_cotangent) {
  const Topology& topo = system.topology();
  if (free_cotangent.rows() != topo.num_free()) {
    throw InvalidArgument("cotangent must have one row per free node");
  }
  Vector grad = Vector::Zero(topo.num_bars());
  if (topo.num_free() == 0 || free_cotangent.isZero(0.0)) return grad;

  const Points adjoint = system.solve_transposed(free_cotangent);
  const auto bars = topo.bars();
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const int a = bars[m].a;
    const int b = bars[m].b;
    Eigen::RowVector3d lam = Eigen::RowVector3d::Zero();
    if (const int ra = topo.free_slot(a); ra >= 0) lam += adjoint.row(ra);
    if (const int rb = topo.free_slot(b); rb >= 0) lam -= adjoint.row(rb);
    grad[static_cast<Eigen::Index>(m)] =
        -lam.dot(state.positions.row(a) - state.positions.row(b));
  }
  return grad;
}

Vector finite_difference_gradient(const ScalarObjective& objective, const Vector& q, double eps) {
  Vector grad(q.size());
  Vector probe = q;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    double up = 0.0;
    double down = 0.0;
    try {
      probe[m] = q[m] + eps;
      up = objective(probe);
      probe[m] = q[m] - eps;
      down = objective(probe);
    } catch (const std::exception& e) {
      throw InvalidArgument("objective failed when perturbing coordinate " + std::to_string(m) +
                            ": " + e.what());
    }
    probe[m] = q[m];
    grad[m] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const Vector& analytic, const Vector& reference, double floor) {
  if (analytic.size() != reference.size()) {
    throw InvalidArgument("gradient vectors differ in length");
  }
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), floor);
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

ValueAndGradient shape_objective(const Topology& topology, const BoundaryConditions& bc,
                                 const ShapeTarget& target, double p, const Vector& q) {
  EquilibriumSystem system(topology, q);
  ValueAndGradient out;
  out.state = system.solve(bc);
  out.value = shape_loss(out.state.positions, target, p);
  const Points dx = shape_loss_gradient(out.state.positions, target, p);
  out.gradient = vjp_solve_wrt_q(system, out.state, free_rows(topology, dx));
  return out;
}

}  // namespace formfind
