#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "formfind/datagen.hpp"
#include "formfind/errors.hpp"
#include "formfind/fdm.hpp"
#include "formfind/losses.hpp"
#include "oracles.hpp"

using namespace formfind;

namespace {

// Node 0 free, nodes 1 and 2 anchored at (0,0,0) and (2,0,0).
Topology single_free_node() { return Topology(3, {{0, 1}, {0, 2}}, {1, 2}); }

BoundaryConditions single_free_bc() {
  Points anchors(2, 3);
  anchors << 0, 0, 0, 2, 0, 0;
  Points loads = Points::Zero(3, 3);
  loads(0, 2) = -1.0;
  return {anchors, loads};
}

// fixed 0 - free 1 - free 2 - fixed 3
Topology chain() { return Topology(4, {{0, 1}, {1, 2}, {2, 3}}, {0, 3}); }

BoundaryConditions random_shell_bc(const Topology& topo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Points anchors(topo.num_fixed(), 3);
  for (Eigen::Index i = 0; i < anchors.size(); ++i) anchors.data()[i] = u(rng);
  Points loads = Points::Zero(topo.num_nodes(), 3);
  for (int i = 0; i < topo.num_nodes(); ++i) loads(i, 2) = -std::abs(u(rng));
  return {anchors, loads};
}

}  // namespace

TEST(Stiffness, SingleBar) {
  const Topology t(2, {{0, 1}}, {1});
  const auto parts = assemble_stiffness(t, Vector::Constant(1, 2.0));
  ASSERT_EQ(parts.free_free.rows(), 1);
  EXPECT_EQ(parts.free_free(0, 0), 2.0);
  EXPECT_EQ(parts.free_fixed(0, 0), -2.0);
}

TEST(Stiffness, ChainByHand) {
  Vector q(3);
  q << 1, 2, 3;
  const auto parts = assemble_stiffness(chain(), q);
  Matrix kuu(2, 2);
  kuu << 3, -2, -2, 5;
  Matrix kus(2, 2);
  kus << -1, 0, 0, -3;
  EXPECT_EQ(parts.free_free, kuu);
  EXPECT_EQ(parts.free_fixed, kus);
}

TEST(Stiffness, MatchesOracleAndRowSumsVanish) {
  std::mt19937_64 rng(3);
  for (const auto& topo : {build_grid_shell_topology(6), build_tower_topology(5, 8)}) {
    const Vector q = oracle::uniform(rng, topo.num_bars(), -10.0, 10.0);
    const Matrix full = assemble_full_stiffness(topo, q);
    EXPECT_EQ(full, oracle::full_stiffness(topo, q));
    // Integer-valued q makes the row sums exact in floating point.
    const Vector qi = q.array().round();
    const Matrix ki = assemble_full_stiffness(topo, qi);
    EXPECT_EQ(ki.rowwise().sum().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(full.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(full, full.transpose());
  }
}

TEST(Solve, SingleFreeNodeClosedForm) {
  const auto state = solve_equilibrium(single_free_node(), Vector::Ones(2), single_free_bc());
  EXPECT_NEAR(state.positions(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(state.positions(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(state.positions(0, 2), -0.5, 1e-12);
  EXPECT_EQ(state.positions.row(2), single_free_bc().anchors.row(1));
  // f = q * l with l = sqrt(1 + 0.25)
  EXPECT_NEAR(state.lengths(0), std::sqrt(1.25), 1e-12);
  EXPECT_NEAR(state.forces(1), std::sqrt(1.25), 1e-12);
}

TEST(Solve, ClosedFormWeightedMean) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 5;
    std::vector<Bar> bars;
    std::vector<int> fixed;
    for (int j = 1; j <= k; ++j) {
      bars.push_back({0, j});
      fixed.push_back(j);
    }
    const Topology topo(k + 1, bars, fixed);
    const Vector q = oracle::uniform(rng, k, 0.1, 5.0);
    Points anchors(k, 3);
    for (Eigen::Index i = 0; i < anchors.size(); ++i) anchors.data()[i] = u(rng);
    Points loads = Points::Zero(k + 1, 3);
    loads.row(0) << u(rng), u(rng), u(rng);
    Eigen::RowVector3d expected = loads.row(0);
    for (int j = 0; j < k; ++j) expected += q(j) * anchors.row(j);
    expected /= q.sum();
    const auto state = solve_equilibrium(topo, q, {anchors, loads});
    EXPECT_LE((state.positions.row(0) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Solve, MatchesQrOracle) {
  std::mt19937_64 rng(5);
  const auto topo = build_grid_shell_topology(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector q = oracle::uniform(rng, topo.num_bars(), -10.0, -0.1);
    const auto bc = random_shell_bc(topo, rng);
    const auto state = solve_equilibrium(topo, q, bc);
    const Points ref = oracle::solve_positions(topo, q, bc.anchors, bc.loads);
    EXPECT_LE((state.positions - ref).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Solve, ZeroLoadPlanarAnchorsStayPlanar) {
  std::mt19937_64 rng(9);
  const auto topo = build_grid_shell_topology(10);
  auto bc = random_shell_bc(topo, rng);
  bc.anchors.col(2).setZero();
  bc.loads.setZero();
  const auto state = solve_equilibrium(topo, oracle::uniform(rng, topo.num_bars(), -10, -0.1), bc);
  EXPECT_LE(state.positions.col(2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Solve, TranslationEquivariance) {
  std::mt19937_64 rng(13);
  const auto topo = build_tower_topology(7, 8);
  const Vector q = tower_signs(7, 8).cwiseProduct(oracle::uniform(rng, topo.num_bars(), 1.0, 5.0));
  const auto inst = sample_tower_target(2, TowerParams{{}, {}, {}, 10.0, 7, 8});
  const auto base = solve_equilibrium(topo, q, inst.bc);
  Eigen::RowVector3d shift(3.5, -1.25, 7.0);
  auto moved_bc = inst.bc;
  moved_bc.anchors.rowwise() += shift;
  const auto moved = solve_equilibrium(topo, q, moved_bc);
  Points expected = base.positions;
  expected.rowwise() += shift;
  EXPECT_LE((moved.positions - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Solve, JointScalingInvariance) {
  std::mt19937_64 rng(17);
  const auto topo = build_grid_shell_topology(10);
  const auto bc = random_shell_bc(topo, rng);
  const Vector q = oracle::uniform(rng, topo.num_bars(), -10, -0.1);
  const auto base = solve_equilibrium(topo, q, bc);
  for (double c : {0.01, 3.0, 250.0}) {
    auto scaled = bc;
    scaled.loads *= c;
    const auto s = solve_equilibrium(topo, Vector(c * q), scaled);
    EXPECT_LE((s.positions - base.positions).cwiseAbs().maxCoeff(), 1e-9) << c;
  }
}

TEST(Solve, DoublySymmetricTargetGivesSymmetricShape) {
  const auto topo = build_grid_shell_topology(6);
  const auto inst = shell_target_from_controls(sample_symmetric_controls(4, 10.0), 6);
  // A q that is symmetric under the grid's mirror maps: constant.
  const auto state = solve_equilibrium(topo, Vector::Constant(topo.num_bars(), -2.0), inst.bc);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      const auto a = state.positions.row(r * 6 + c);
      const auto b = state.positions.row(r * 6 + (5 - c));
      EXPECT_NEAR(a(0), -b(0), 1e-9);
      EXPECT_NEAR(a(2), b(2), 1e-9);
    }
  }
}

TEST(Solve, SingularAndDegenerate) {
  const auto topo = single_free_node();
  try {
    solve_equilibrium(topo, Vector::Zero(2), single_free_bc());
    FAIL() << "expected SingularSystemError";
  } catch (const SingularSystemError& e) {
    EXPECT_TRUE(std::isinf(e.condition_estimate()) || e.condition_estimate() > kSingularConditionLimit);
  }
  Vector cancel(2);
  cancel << 1.0, -1.0;
  EXPECT_THROW(solve_equilibrium(topo, cancel, single_free_bc()), SingularSystemError);
  // Chain with K_uu = [[1+e, -1], [-1, 1+e]]: eigenvalues e and 2+e.
  Vector ill(3);
  ill << 1e-14, 1.0, 1e-14;
  BoundaryConditions chain_bc{Points::Ones(2, 3), Points::Zero(4, 3)};
  try {
    solve_equilibrium(chain(), ill, chain_bc);
    FAIL() << "expected SingularSystemError";
  } catch (const SingularSystemError& e) {
    EXPECT_GT(e.condition_estimate(), kSingularConditionLimit);
  }

  // Free node lands on the anchor: zero-length bar.
  Points anchors(2, 3);
  anchors << 0, 0, 0, 0, 0, 0;
  BoundaryConditions bc{anchors, Points::Zero(3, 3)};
  try {
    solve_equilibrium(topo, Vector::Ones(2), bc);
    FAIL() << "expected DegenerateGeometryError";
  } catch (const DegenerateGeometryError& e) {
    EXPECT_GE(e.bar(), 0);
  }
}

TEST(Solve, RejectsMismatchedInputs) {
  EXPECT_THROW(solve_equilibrium(single_free_node(), Vector::Ones(3), single_free_bc()),
               InvalidArgument);
  auto bc = single_free_bc();
  bc.anchors = Points::Zero(1, 3);
  EXPECT_THROW(solve_equilibrium(single_free_node(), Vector::Ones(2), bc), InvalidArgument);
  Vector nan_q = Vector::Ones(2);
  nan_q(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve_equilibrium(single_free_node(), nan_q, single_free_bc()), InvalidArgument);
}

TEST(Residual, HandEvaluation) {
  // Sum_m q_m (x_i - x_j) - p_i at x = 0: (0-0) + (0-2, 0, 0) - (0, 0, -1) = (-2, 0, 1).
  const Points x = Points::Zero(3, 3);
  Points positions = x;
  positions.row(2) << 2, 0, 0;
  const Points r = residual_forces(positions, Vector::Ones(2), single_free_bc(), single_free_node());
  ASSERT_EQ(r.rows(), 1);
  EXPECT_DOUBLE_EQ(r(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(r(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(physics_loss(r), std::sqrt(5.0));
}

TEST(Residual, CoincidentNodesZeroLoads) {
  BoundaryConditions bc{Points::Zero(2, 3), Points::Zero(3, 3)};
  const Points r = residual_forces(Points::Zero(3, 3), Vector::Ones(2), bc, single_free_node());
  EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Residual, ReferenceLoopAgrees) {
  std::mt19937_64 rng(21);
  const auto topo = build_grid_shell_topology(5);
  const auto bc = random_shell_bc(topo, rng);
  const Vector q = oracle::uniform(rng, topo.num_bars(), -4, 4);
  Points x(topo.num_nodes(), 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<>(-1, 1)(rng);
  const Matrix k = oracle::full_stiffness(topo, q);
  const Points r = residual_forces(x, q, bc, topo);
  for (int s = 0; s < topo.num_free(); ++s) {
    const int i = topo.free()[s];
    Eigen::RowVector3d expected = k.row(i) * x - bc.loads.row(i);
    EXPECT_LE((r.row(s) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Residual, VanishesAfterSolveForRandomSystems) {
  std::mt19937_64 rng(23);
  const auto shell = build_grid_shell_topology(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bc = random_shell_bc(shell, rng);
    const Vector q = oracle::uniform(rng, shell.num_bars(), -10, -0.1);
    const auto state = solve_equilibrium(shell, q, bc);
    const double scale = std::max(1.0, bc.loads.norm());
    ASSERT_LE(physics_loss(state.residuals), 1e-9 * scale);
    ASSERT_LE(physics_loss(residual_forces(state.positions, q, bc, shell)), 1e-9 * scale);
  }
  const TowerParams shape{{}, {}, {}, 10.0, 21, 16};
  const auto tower = build_tower_topology(21, 16);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = sample_tower_target(static_cast<std::uint64_t>(trial), shape);
    const Vector q = inst.signs.cwiseProduct(oracle::uniform(rng, tower.num_bars(), 1.0, 20.0));
    const auto state = solve_equilibrium(tower, q, inst.bc);
    ASSERT_LE(physics_loss(state.residuals), 1e-9);
  }
}
