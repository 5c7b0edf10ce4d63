#include "formfind/fdm.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "formfind/errors.hpp"

namespace formfind {

namespace {

void check_q(const Topology& topology, const Vector& q) {
  if (q.size() != topology.num_bars()) {
    throw InvalidArgument("expected " + std::to_string(topology.num_bars()) +
                          " force densities, got " + std::to_string(q.size()));
  }
  if (!q.allFinite()) throw InvalidArgument("force densities must be finite");
}

}  // namespace

StiffnessParts assemble_stiffness(const Topology& topology, const Vector& q) {
  check_q(topology, q);
  const int nu = topology.num_free();
  StiffnessParts k{Matrix::Zero(nu, nu), Matrix::Zero(nu, topology.num_fixed())};

  const auto bars = topology.bars();
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const double qm = q[static_cast<Eigen::Index>(m)];
    const int ends[2] = {bars[m].a, bars[m].b};
    for (int e = 0; e < 2; ++e) {
      const int row = topology.free_slot(ends[e]);
      if (row < 0) continue;
      const int other = ends[1 - e];
      k.free_free(row, row) += qm;
      if (const int col = topology.free_slot(other); col >= 0) {
        k.free_free(row, col) -= qm;
      } else {
        k.free_fixed(row, topology.fixed_slot(other)) -= qm;
      }
    }
  }
  return k;
}

Matrix assemble_full_stiffness(const Topology& topology, const Vector& q) {
  check_q(topology, q);
  Matrix k = Matrix::Zero(topology.num_nodes(), topology.num_nodes());
  const auto bars = topology.bars();
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const double qm = q[static_cast<Eigen::Index>(m)];
    k(bars[m].a, bars[m].a) += qm;
    k(bars[m].b, bars[m].b) += qm;
    k(bars[m].a, bars[m].b) -= qm;
    k(bars[m].b, bars[m].a) -= qm;
  }
  return k;
}

EquilibriumSystem::EquilibriumSystem(const Topology& topology, Vector q)
    : topology_(&topology), q_(std::move(q)), stiffness_(assemble_stiffness(topology, q_)) {
  if (topology.num_free() == 0) return;
  if (!stiffness_.free_free.allFinite()) {
    throw SingularSystemError("stiffness matrix has non-finite entries",
                              std::numeric_limits<double>::infinity());
  }
  lu_.compute(stiffness_.free_free);
  const double rcond = lu_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kSingularConditionLimit)) {
    throw SingularSystemError(
        "free-free stiffness block is singular (condition estimate " +
            std::to_string(condition_) + ")",
        condition_);
  }
}

Points EquilibriumSystem::solve_free(const Points& rhs) const {
  if (rhs.rows() == 0) return rhs;
  Points x = lu_.solve(rhs);
  const Points correction = lu_.solve(rhs - stiffness_.free_free * x);
  x += correction;
  return x;
}

Points EquilibriumSystem::solve_transposed(const Points& rhs) const {
  if (rhs.rows() == 0) return rhs;
  Points x = lu_.transpose().solve(rhs);
  const Points correction =
      lu_.transpose().solve(rhs - stiffness_.free_free.transpose() * x);
  x += correction;
  return x;
}

EquilibriumState EquilibriumSystem::solve(const BoundaryConditions& bc) const {
  const Topology& topo = *topology_;
  check_boundary_conditions(topo, bc);

  const Points free_loads = free_rows(topo, bc.loads);
  const Points rhs = free_loads - stiffness_.free_fixed * bc.anchors;
  const Points free_positions = solve_free(rhs);

  EquilibriumState state;
  state.positions = assemble_positions(topo, free_positions, bc.anchors);
  bar_forces(topo, q_, state.positions, state.lengths, state.forces);
  state.residuals = residual_forces(state.positions, q_, bc, topo);
  return state;
}

EquilibriumState solve_equilibrium(const Topology& topology, const Vector& q,
                                   const BoundaryConditions& bc) {
  return EquilibriumSystem(topology, q).solve(bc);
}

Points residual_forces(const Points& positions, const Vector& q, const BoundaryConditions& bc,
                       const Topology& topology) {
  check_q(topology, q);
  check_boundary_conditions(topology, bc);
  if (positions.rows() != topology.num_nodes()) {
    throw InvalidArgument("positions must have one row per node");
  }
  Points r = Points::Zero(topology.num_free(), 3);
  const auto bars = topology.bars();
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const double qm = q[static_cast<Eigen::Index>(m)];
    const int a = bars[m].a;
    const int b = bars[m].b;
    // K_ab = -q_m, so K_ab (x_b - x_a) = q_m (x_a - x_b).
    const Eigen::RowVector3d d = qm * (positions.row(a) - positions.row(b));
    if (const int ra = topology.free_slot(a); ra >= 0) r.row(ra) += d;
    if (const int rb = topology.free_slot(b); rb >= 0) r.row(rb) -= d;
  }
  r -= free_rows(topology, bc.loads);
  return r;
}

Points assemble_positions(const Topology& topology, const Points& free_positions,
                          const Points& anchors) {
  Points x(topology.num_nodes(), 3);
  const auto free = topology.free();
  for (std::size_t i = 0; i < free.size(); ++i) {
    x.row(free[i]) = free_positions.row(static_cast<Eigen::Index>(i));
  }
  const auto fixed = topology.fixed();
  for (std::size_t s = 0; s < fixed.size(); ++s) {
    x.row(fixed[s]) = anchors.row(static_cast<Eigen::Index>(s));
  }
  return x;
}

Points free_rows(const Topology& topology, const Points& positions) {
  Points out(topology.num_free(), 3);
  const auto free = topology.free();
  for (std::size_t i = 0; i < free.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = positions.row(free[i]);
  }
  return out;
}

void bar_forces(const Topology& topology, const Vector& q, const Points& positions,
                Vector& lengths, Vector& forces) {
  const auto bars = topology.bars();
  lengths.resize(topology.num_bars());
  forces.resize(topology.num_bars());
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    const double l = (positions.row(bars[m].a) - positions.row(bars[m].b)).norm();
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw DegenerateGeometryError("bar " + std::to_string(m) + " has zero or invalid length",
                                    static_cast<int>(m));
    }
    lengths[i] = l;
    forces[i] = q[i] * l;
  }
}

}  // namespace formfind
