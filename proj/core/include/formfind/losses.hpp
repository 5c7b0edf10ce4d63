#pragma once

#include "formfind/structure.hpp"
#include "formfind/types.hpp"

namespace formfind {

/// Target node positions and a 0/1 mask of which coordinates count.
struct ShapeTarget {
  Points positions;
  Points mask;
};

/// sum_i sum_d mask_id * |X_id - Xhat_id|^p
double shape_loss(const Points& positions, const ShapeTarget& target, double p);

/// d shape_loss / d X. Where a coordinate difference is exactly zero the
/// derivative is taken as 0 (subgradient choice for p = 1).
Points shape_loss_gradient(const Points& positions, const ShapeTarget& target, double p);

/// Frobenius norm of the residual matrix.
double physics_loss(const Points& residuals);

struct PhysicsLossGradient {
  double value = 0.0;
  Vector dq;          // d ||R||_F / d q
  Points dfree;       // d ||R||_F / d X_u (free rows only)
};

/// Physics loss of arbitrary positions together with its gradients with respect
/// to q and the free-node positions. The gradient is zero when R = 0.
PhysicsLossGradient physics_loss_gradient(const Topology& topology, const Vector& q,
                                          const Points& positions,
                                          const BoundaryConditions& bc);

/// Var(q_pos) + Var(q_neg) over all entries of a B x M batch (one row per
/// sample), pooled across samples, using population variance. A sign class
/// with no entries contributes 0.
double regularization_loss(const Matrix& q_batch, const Vector& signs);
Matrix regularization_loss_gradient(const Matrix& q_batch, const Vector& signs);

}  // namespace formfind
