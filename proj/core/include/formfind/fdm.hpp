#pragma once

#include <Eigen/LU>

#include "formfind/structure.hpp"
#include "formfind/types.hpp"

namespace formfind {

/// Rows of the stiffness matrix K(q) at the free nodes, split by column into
/// the free block (N_u x N_u) and the anchor block (N_u x N_s).
struct StiffnessParts {
  Matrix free_free;
  Matrix free_fixed;
};

/// Condition estimates above this value are reported as singular systems.
inline constexpr double kSingularConditionLimit = 1e12;

StiffnessParts assemble_stiffness(const Topology& topology, const Vector& q);

/// Full N x N matrix K(q). Used by tests and diagnostics only.
Matrix assemble_full_stiffness(const Topology& topology, const Vector& q);

/// Factorized force-density system for one (topology, q) pair.
///
/// The LU factorization of the free-free block is computed once and reused
/// for the forward solve and for the transposed (adjoint) solves. The
/// topology is held by reference and must outlive the system.
class EquilibriumSystem {
 public:
  EquilibriumSystem(const Topology& topology, Vector q);

  const Topology& topology() const noexcept { return *topology_; }
  const Vector& q() const noexcept { return q_; }
  const StiffnessParts& stiffness() const noexcept { return stiffness_; }
  double condition_estimate() const noexcept { return condition_; }

  EquilibriumState solve(const BoundaryConditions& bc) const;

  /// K_uu^{-1} rhs, with one step of iterative refinement.
  Points solve_free(const Points& rhs) const;
  /// K_uu^{-T} rhs through the same factorization.
  Points solve_transposed(const Points& rhs) const;

 private:
  const Topology* topology_;
  Vector q_;
  StiffnessParts stiffness_;
  Eigen::PartialPivLU<Matrix> lu_;
  double condition_ = 1.0;
};

EquilibriumState solve_equilibrium(const Topology& topology, const Vector& q,
                                   const BoundaryConditions& bc);

/// r_i = sum_{j in N(i)} K_ij (x_j - x_i) - p_i at every free node, evaluated
/// at arbitrary positions.
Points residual_forces(const Points& positions, const Vector& q, const BoundaryConditions& bc,
                       const Topology& topology);

/// Scatter free-node rows and anchor rows into an N x 3 matrix.
Points assemble_positions(const Topology& topology, const Points& free_positions,
                          const Points& anchors);

/// Rows of `positions` at the free nodes, in Topology::free() order.
Points free_rows(const Topology& topology, const Points& positions);

/// Bar lengths and forces (f = q * l) for given positions. Throws
/// DegenerateGeometryError on a zero-length bar.
void bar_forces(const Topology& topology, const Vector& q, const Points& positions,
                Vector& lengths, Vector& forces);

}  // namespace formfind
