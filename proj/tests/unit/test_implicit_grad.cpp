#include <gtest/gtest.h>

#include "pcm/implicit_grad.hpp"

using namespace pcm;

namespace {

Vec random_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

SolverOpts tight() {
  SolverOpts o;
  o.grad_tol = 1e-12;
  return o;
}

}  // namespace

// A one-term-plus-zero LSE in 1D has a closed-form minimizer:
// T log(exp(0) + exp((a u + b)/T)) is decreasing for a < 0, so on a box the
// minimizer sits at the upper bound, and the sensitivity must vanish.
TEST(MinimizerVjp, ClampedCoordinateHasZeroSensitivity) {
  const LseNet lse({{Vec::Constant(1, 0.0), 0.0}, {Vec::Constant(1, -1.0), 0.2}}, 1.0);
  const Box box = Box::uniform(1, -1.0, 1.0);
  const SolveResult r = solve_lse(lse, box, tight());
  ASSERT_EQ(r.minimizer[0], 1.0);
  const auto adj = minimizer_vjp_coefficients(lse, box, r.minimizer, Vec::Ones(1), SensitivityMode::Implicit);
  EXPECT_EQ(adj.d_slopes.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(adj.d_offsets.cwiseAbs().maxCoeff(), 0.0);
}

// Two terms a1 u + b1, a2 u + b2 with a1 < 0 < a2: the LSE minimizer is where
// the softmax weights satisfy p1 a1 + p2 a2 = 0, i.e.
// u* = (T log(-a1 / a2) + b1 - b2) / (a2 - a1).
TEST(MinimizerVjp, ClosedFormTwoTermOracle) {
  const double a1 = -1.3, a2 = 0.8, b1 = 0.1, b2 = -0.2, t = 0.6;
  const auto ustar = [t](double p, double q, double r, double s) {
    return (t * std::log(-p / q) + r - s) / (q - p);
  };
  const LseNet lse({{Vec::Constant(1, a1), b1}, {Vec::Constant(1, a2), b2}}, t);
  const Box box = Box::uniform(1, -5.0, 5.0);
  const SolveResult r = solve_lse(lse, box, tight());
  EXPECT_NEAR(r.minimizer[0], ustar(a1, a2, b1, b2), 1e-12);
  const auto adj = minimizer_vjp_coefficients(lse, box, r.minimizer, Vec::Ones(1), SensitivityMode::Implicit);
  const double h = 1e-6;
  const double d_a1 = (ustar(a1 + h, a2, b1, b2) - ustar(a1 - h, a2, b1, b2)) / (2 * h);
  const double d_a2 = (ustar(a1, a2 + h, b1, b2) - ustar(a1, a2 - h, b1, b2)) / (2 * h);
  const double d_b1 = 1.0 / (a2 - a1), d_b2 = -1.0 / (a2 - a1);
  EXPECT_NEAR(adj.d_slopes(0, 0), d_a1, 1e-8);
  EXPECT_NEAR(adj.d_slopes(1, 0), d_a2, 1e-8);
  EXPECT_NEAR(adj.d_offsets[0], d_b1, 1e-10);
  EXPECT_NEAR(adj.d_offsets[1], d_b2, 1e-10);
}

TEST(MinimizerVjp, NetworkVjpMatchesFiniteDifferencesThroughSolver) {
  Rng rng(12);
  int checked = 0;
  for (int attempt = 0; attempt < 200 && checked < 5; ++attempt) {
    PlseNet net(1, 2, 6, 1.0, {5}, Activation::Tanh, true);
    net.set_params(random_vec(rng, net.num_params(), -1, 1));
    const Box box = Box::uniform(2, -2.0, 2.0);
    const Vec x = random_vec(rng, 1, -1, 1);
    const SolveResult s = solve_pcm(net, x, box, tight());
    if ((s.minimizer.cwiseAbs().array() > 1.9).any()) continue;
    const Vec up = random_vec(rng, 2, -1, 1);
    const Vec vjp = minimizer_vjp(net, x, box, s, up, SensitivityMode::Implicit);
    PlseNet probe = net;
    const Vec fd = finite_diff_grad(
        [&](const Vec& p) {
          probe.set_params(p);
          return up.dot(solve_pcm(probe, x, box, tight()).minimizer);
        },
        net.get_params(), 1e-5);
    EXPECT_LT(max_rel_err(vjp, fd), 1e-5);
    ++checked;
  }
  EXPECT_EQ(checked, 5);
}

TEST(MinimizerVjp, DetachedModeIsZero) {
  Rng rng(13);
  PlseNet net(1, 1, 4, 1.0, {4}, Activation::Tanh, true);
  net.set_params(random_vec(rng, net.num_params(), -1, 1));
  const Box box = Box::uniform(1, -1.0, 1.0);
  const SolveResult s = solve_pcm(net, Vec::Zero(1), box, tight());
  const Vec v = minimizer_vjp(net, Vec::Zero(1), box, s, Vec::Ones(1), SensitivityMode::Detached);
  EXPECT_EQ(v.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MinimizerSensitivity, ActiveMaskFlagsClampedCoordinates) {
  const LseNet lse({{Vec::Zero(2), 0.0}, {(Vec(2) << -1.0, 0.0).finished(), 0.0},
                    {(Vec(2) << 0.0, 1.0).finished(), 0.0}, {(Vec(2) << 0.0, -1.0).finished(), 0.0}},
                   1.0);
  const Box box = Box::uniform(2, -1.0, 1.0);
  const SolveResult r = solve_lse(lse, box, tight());
  const auto sens = minimizer_sensitivity(lse, box, r.minimizer, SensitivityMode::Implicit);
  EXPECT_TRUE(sens.active_mask[0]);
  EXPECT_FALSE(sens.active_mask[1]);
  EXPECT_NEAR(r.minimizer[1], 0.0, 1e-12);
}
