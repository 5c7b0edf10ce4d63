#include <gtest/gtest.h>

#include <sstream>

#include "formfind/direct_opt.hpp"
#include "formfind/errors.hpp"
#include "formfind/gradients.hpp"
#include "formfind/losses.hpp"
#include "formfind/training.hpp"
#include "oracles.hpp"

using namespace formfind;

namespace {

Topology single_free_node() { return Topology(3, {{0, 1}, {0, 2}}, {1, 2}); }

BoundaryConditions single_free_bc() {
  Points anchors(2, 3);
  anchors << 0, 0, 0, 2, 0, 0;
  Points loads = Points::Zero(3, 3);
  loads(0, 2) = -1.0;
  return {anchors, loads};
}

}  // namespace

TEST(Box, SignsAndShift) {
  Vector s(2);
  s << -1, 1;
  const Box box = Box::from_signs(s, 1.0, 20.0);
  EXPECT_EQ(box.lower(0), -20.0);
  EXPECT_EQ(box.upper(0), -1.0);
  EXPECT_EQ(box.lower(1), 1.0);
  EXPECT_EQ(box.upper(1), 20.0);
  Vector q(2);
  q << 5.0, 40.0;
  EXPECT_EQ(box.project(q), Vector((Vector(2) << -1.0, 20.0).finished()));
  EXPECT_FALSE(box.contains(q));
  EXPECT_THROW(Box::from_signs(s, 30.0, 20.0), InvalidArgument);
}

TEST(Initializer, Strategies) {
  const Vector s = Vector::Constant(4, -1.0);
  const Box box = Box::from_signs(s, 0.0);
  EXPECT_EQ(make_initializer(InitStrategy::expert, box, s), Vector::Constant(4, -1.0));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Vector q = make_initializer(InitStrategy::randomized, box, s, seed);
    ASSERT_TRUE(box.contains(q));
    ASSERT_LE(q.maxCoeff(), 0.0);
  }
  EXPECT_NE(make_initializer(InitStrategy::randomized, box, s, 1),
            make_initializer(InitStrategy::randomized, box, s, 2));
  EXPECT_THROW(make_initializer(InitStrategy::warm_start, box, s), InvalidArgument);

  const TowerTask towers(5, 8);
  const Box tbox = Box::from_signs(towers.signs(), towers.shift());
  const Vector expert = make_initializer(InitStrategy::expert, tbox, towers.signs());
  EXPECT_EQ(expert, towers.signs());  // s * 1 already sits on |q| = tau = 1

  auto model = init_model(ModelKind::ours, towers, {8, 2}, 0);
  model.encoder.layers().back().bias.setConstant(100.0);  // |q| ~ 101, beyond the box
  const auto sample = towers.sample(0);
  const Vector warm = make_initializer(InitStrategy::warm_start, tbox, towers.signs(), 0, &model,
                                       &sample.encoder_input);
  EXPECT_TRUE(tbox.contains(warm));
  EXPECT_EQ(warm.cwiseAbs().maxCoeff(), 20.0);

  EXPECT_EQ(init_strategy_from_string("warm-start"), InitStrategy::warm_start);
  EXPECT_THROW(init_strategy_from_string("psychic"), InvalidArgument);
}

TEST(Optimize, SingleFreeNodeReachableTarget) {
  // Target reachable with q = (1, 3): x = (0*1 + 2*3, 0, -1) / 4.
  Points hat(3, 3);
  hat << 1.5, 0, -0.25, 0, 0, 0, 2, 0, 0;
  const ShapeTarget target{hat, Points::Ones(3, 3)};
  const Vector s = Vector::Ones(2);
  const auto r = optimize(single_free_node(), single_free_bc(), target, s, 0.0, 2.0, Vector::Ones(2));
  EXPECT_LE(r.loss, 1e-8);
  EXPECT_NEAR(r.q(0), 1.0, 1e-3);
  EXPECT_NEAR(r.q(1), 3.0, 1e-3);
}

TEST(Optimize, RejectsSingularStart) {
  const ShapeTarget target{Points::Zero(3, 3), Points::Ones(3, 3)};
  EXPECT_THROW(optimize(single_free_node(), single_free_bc(), target, Vector::Ones(2), 0.0, 2.0,
                        Vector::Zero(2)),
               SingularSystemError);
}

TEST(Optimize, TowerInvariants) {
  const TowerTask task(5, 8);
  const Box box = Box::from_signs(task.signs(), task.shift());
  OptConfig config;
  config.max_iters = 200;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sample = task.sample(seed);
    const auto r = optimize_sample(task, sample, InitStrategy::randomized, config, seed);
    ASSERT_FALSE(r.trace.empty());
    EXPECT_EQ(r.trace.front().iteration, 0);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      ASSERT_LE(r.trace[i].loss, r.trace[i - 1].loss);
      ASSERT_GE(r.trace[i].elapsed_ms, r.trace[i - 1].elapsed_ms);
    }
    EXPECT_TRUE(box.contains(r.q));
    EXPECT_EQ(r.loss, r.trace.back().loss);
    EXPECT_LE(physics_loss(r.state.residuals), 1e-9);

    // p = 2 loss recomputed independently at the returned q.
    const Points x = oracle::solve_positions(task.topology(), r.q, sample.bc.anchors, sample.bc.loads);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (int d = 0; d < 3; ++d) {
        const double diff = x(i, d) - sample.target.positions(i, d);
        loss += sample.target.mask(i, d) * diff * diff;
      }
    }
    EXPECT_NEAR(r.loss, loss, 1e-10 * std::max(1.0, loss));
    const auto vg = shape_objective(task.topology(), sample.bc, sample.target, 2.0, r.q);
    const Vector fd = oracle::central_difference(
        [&](const Vector& q) {
          const Points y = oracle::solve_positions(task.topology(), q, sample.bc.anchors, sample.bc.loads);
          return ((y - sample.target.positions).cwiseProduct(sample.target.mask)).squaredNorm();
        },
        r.q, 1e-6);
    EXPECT_LE(oracle::rel_error(vg.gradient, fd), 1e-5);
  }
}

TEST(Optimize, ExpertBeatsRandomOnTowers) {
  const TowerTask task(7, 8);
  OptConfig config;
  config.max_iters = 300;
  int wins = 0;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto sample = task.sample(held_out_seeds(4, 5)[i]);
    const auto expert = optimize_sample(task, sample, InitStrategy::expert, config);
    const auto random = optimize_sample(task, sample, InitStrategy::randomized, config, i);
    if (expert.loss < random.loss) ++wins;
  }
  EXPECT_GE(wins, 4);
}

TEST(Optimize, ShellsConvergeAndStayInEquilibrium) {
  const ShellTask task(6);
  const auto sample = task.sample(held_out_seeds(9, 1)[0]);
  const auto r = optimize_sample(task, sample, InitStrategy::expert);
  EXPECT_LT(r.loss, r.trace.front().loss);
  EXPECT_LE(physics_loss(r.state.residuals), 1e-9 * std::max(1.0, sample.bc.loads.norm()));
  EXPECT_LE(r.q.maxCoeff(), 0.0);
  EXPECT_GE(r.q.minCoeff(), -20.0);
}

TEST(TraceCsv, Format) {
  std::ostringstream out;
  write_trace_csv(out, {{0, 0.0, 2.5, 1.0}, {1, 0.125, 1.0 / 3.0, 0.5}});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,elapsed_ms,loss,grad_norm");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,2.5,1");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0.125,0.33333333333333331,0.5");
}
