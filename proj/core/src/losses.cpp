#include "formfind/losses.hpp"

#include <cmath>

#include "formfind/errors.hpp"
#include "formfind/fdm.hpp"

namespace formfind {

namespace {

void check_target(const Points& positions, const ShapeTarget& target) {
  if (positions.rows() != target.positions.rows() || target.mask.rows() != positions.rows()) {
    throw InvalidArgument("shape target and positions differ in node count");
  }
}

}  // namespace

double shape_loss(const Points& positions, const ShapeTarget& target, double p) {
  check_target(positions, target);
  const auto diff = (positions - target.positions).array().abs();
  if (p == 1.0) return (target.mask.array() * diff).sum();
  if (p == 2.0) return (target.mask.array() * diff.square()).sum();
  return (target.mask.array() * diff.pow(p)).sum();
}

Points shape_loss_gradient(const Points& positions, const ShapeTarget& target, double p) {
  check_target(positions, target);
  Points g(positions.rows(), 3);
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    for (int d = 0; d < 3; ++d) {
      const double diff = positions(i, d) - target.positions(i, d);
      const double mask = target.mask(i, d);
      if (diff == 0.0 || mask == 0.0) {
        g(i, d) = 0.0;
      } else if (p == 1.0) {
        g(i, d) = mask * (diff > 0.0 ? 1.0 : -1.0);
      } else if (p == 2.0) {
        g(i, d) = 2.0 * mask * diff;
      } else {
        g(i, d) = mask * p * std::pow(std::abs(diff), p - 1.0) * (diff > 0.0 ? 1.0 : -1.0);
      }
    }
  }
  return g;
}

double physics_loss(const Points& residuals) { return residuals.norm(); }

PhysicsLossGradient physics_loss_gradient(const Topology& topology, const Vector& q,
                                          const Points& positions,
                                          const BoundaryConditions& bc) {
  const Points r = residual_forces(positions, q, bc, topology);
  PhysicsLossGradient out;
  out.value = r.norm();
  out.dq = Vector::Zero(topology.num_bars());
  out.dfree = Points::Zero(topology.num_free(), 3);
  if (out.value == 0.0) return out;

  const Points g = r / out.value;
  const auto bars = topology.bars();
  for (std::size_t m = 0; m < bars.size(); ++m) {
    const int a = bars[m].a;
    const int b = bars[m].b;
    const int ra = topology.free_slot(a);
    const int rb = topology.free_slot(b);
    Eigen::RowVector3d ga = Eigen::RowVector3d::Zero();
    if (ra >= 0) ga += g.row(ra);
    if (rb >= 0) ga -= g.row(rb);
    const auto mi = static_cast<Eigen::Index>(m);
    out.dq[mi] = ga.dot(positions.row(a) - positions.row(b));
    if (ra >= 0) out.dfree.row(ra) += q[mi] * ga;
    if (rb >= 0) out.dfree.row(rb) -= q[mi] * ga;
  }
  return out;
}

namespace {

struct SignClassStats {
  double mean = 0.0;
  double count = 0.0;
};

void class_means(const Matrix& q_batch, const Vector& signs, SignClassStats& pos,
                 SignClassStats& neg) {
  if (q_batch.cols() != signs.size()) {
    throw InvalidArgument("regularization batch width does not match the sign vector");
  }
  if (q_batch.rows() < 1) {
    throw InvalidArgument("regularization needs at least one sample");
  }
  double sum_pos = 0.0;
  double sum_neg = 0.0;
  for (Eigen::Index m = 0; m < signs.size(); ++m) {
    const double col = q_batch.col(m).sum();
    if (signs[m] > 0.0) {
      sum_pos += col;
      pos.count += static_cast<double>(q_batch.rows());
    } else {
      sum_neg += col;
      neg.count += static_cast<double>(q_batch.rows());
    }
  }
  if (pos.count > 0) pos.mean = sum_pos / pos.count;
  if (neg.count > 0) neg.mean = sum_neg / neg.count;
}

}  // namespace

double regularization_loss(const Matrix& q_batch, const Vector& signs) {
  SignClassStats pos;
  SignClassStats neg;
  class_means(q_batch, signs, pos, neg);
  double ss_pos = 0.0;
  double ss_neg = 0.0;
  for (Eigen::Index m = 0; m < signs.size(); ++m) {
    if (signs[m] > 0.0) {
      ss_pos += (q_batch.col(m).array() - pos.mean).square().sum();
    } else {
      ss_neg += (q_batch.col(m).array() - neg.mean).square().sum();
    }
  }
  return (pos.count > 0 ? ss_pos / pos.count : 0.0) + (neg.count > 0 ? ss_neg / neg.count : 0.0);
}

Matrix regularization_loss_gradient(const Matrix& q_batch, const Vector& signs) {
  SignClassStats pos;
  SignClassStats neg;
  class_means(q_batch, signs, pos, neg);
  Matrix g(q_batch.rows(), q_batch.cols());
  for (Eigen::Index m = 0; m < signs.size(); ++m) {
    const auto& cls = signs[m] > 0.0 ? pos : neg;
    g.col(m) = 2.0 * (q_batch.col(m).array() - cls.mean) / cls.count;
  }
  return g;
}

}  // namespace formfind
