#include <gtest/gtest.h>

#include <cmath>

#include "pcm/convex_solve.hpp"

using namespace pcm;

namespace {

SmoothObjective diagonal_quadratic(const Vec& d, const Vec& c) {
  SmoothObjective obj;
  obj.value_grad = [d, c](const Vec& u, Vec* g) {
    const Vec r = u - c;
    if (g != nullptr) *g = d.cwiseProduct(r);
    return 0.5 * r.dot(d.cwiseProduct(r));
  };
  obj.hessian = [d](const Vec&) { return Mat(d.asDiagonal()); };
  return obj;
}

Vec random_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(Box, ProjectAndContains) {
  const Box b = Box::uniform(2, -1.0, 1.0);
  Vec u(2);
  u << 3.0, -0.5;
  EXPECT_EQ(b.project(u), (Vec(2) << 1.0, -0.5).finished());
  EXPECT_FALSE(b.contains(u));
  EXPECT_TRUE(b.contains(b.project(u)));
  EXPECT_THROW(Box(Vec::Ones(2), Vec::Zero(2)), ContractViolation);
}

TEST(MinimizeBox, SeparableQuadraticIsClippedCenter) {
  // For a diagonal Hessian the box minimizer is the clipped unconstrained one.
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vec d = random_vec(rng, 4, 0.1, 3.0), c = random_vec(rng, 4, -2.0, 2.0);
    const Box box = Box::uniform(4, -1.0, 1.0);
    const SolveResult r = minimize_box(diagonal_quadratic(d, c), box, box.center(), SolverOpts{});
    ASSERT_TRUE(r.converged);
    EXPECT_LT((r.minimizer - box.project(c)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(MinimizeBox, GradientOnlyPathAlsoConverges) {
  SolverOpts o;
  o.use_newton = false;
  o.max_iters = 5000;
  const Vec d = (Vec(2) << 1.0, 4.0).finished(), c = (Vec(2) << 0.3, 5.0).finished();
  const Box box = Box::uniform(2, -1.0, 1.0);
  const SolveResult r = minimize_box(diagonal_quadratic(d, c), box, box.center(), o);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.minimizer[0], 0.3, 1e-7);
  EXPECT_EQ(r.minimizer[1], 1.0);
}

TEST(SolveLse, MatchesBruteForceGrid) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    Mat a(6, 1);
    for (int i = 0; i < 6; ++i) a(i, 0) = rng.uniform(-2, 2);
    const LseNet lse(a, random_vec(rng, 6, -1, 1), rng.uniform(0.2, 2.0));
    const Box box = Box::uniform(1, -1.0, 1.0);
    const SolveResult r = solve_lse(lse, box, SolverOpts{});
    ASSERT_TRUE(r.converged);
    const SolveResult g = brute_force_grid([&](const Vec& u) { return lse.value(u); }, box, 20001);
    EXPECT_LE(r.value, g.value + 1e-12);
    EXPECT_NEAR(r.minimizer[0], g.minimizer[0], 2e-4);
  }
}

TEST(SolvePcm, MinimizerIsStationaryOnTheBox) {
  Rng rng(3);
  PlseNet net(2, 3, 8, 0.7, {8}, Activation::Tanh, true);
  const Box box = Box::uniform(3, -1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    net.set_params(random_vec(rng, net.num_params(), -1, 1));
    const Vec x = random_vec(rng, 2, -1, 1);
    const SolveResult r = solve_pcm(net, x, box, SolverOpts{});
    ASSERT_TRUE(r.converged);
    const Vec g = net.slice(x).eval(r.minimizer).grad;
    EXPECT_LE(projected_gradient_norm(box, r.minimizer, g), 1e-8);
  }
}

TEST(SolveDca, ObjectiveTraceIsNonIncreasing) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    Mat a(5, 2), b(5, 2);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2, 2);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-1, 1);
    const DlseNet net(LseNet(a, random_vec(rng, 5, -1, 1), 1.0), LseNet(b, random_vec(rng, 5, -1, 1), 1.0));
    std::vector<double> trace;
    const Vec x = Vec::Constant(1, rng.uniform(-1, 1));
    const SolveResult r = solve_dca(net, Box::uniform(1, -1.0, 1.0), x, SolverOpts{}, &trace);
    ASSERT_GE(trace.size(), 2u);
    for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1] + 1e-12);
    EXPECT_NEAR(r.value, net.eval(join(x, r.minimizer)).value, 1e-12);
  }
}

TEST(Multistart, FindsGlobalMinimumOfTwoWellFunction) {
  SmoothObjective obj;
  // wells at -0.8 (deeper) and 0.7
  obj.value_grad = [](const Vec& u, Vec* g) {
    const double v = u[0];
    if (g != nullptr) *g = Vec::Constant(1, 4 * v * v * v - 2 * v + 0.3);
    return v * v * v * v - v * v + 0.3 * v;
  };
  const SolveResult r = solve_multistart(obj, Box::uniform(1, -1.5, 1.5), SolverOpts{});
  const SolveResult g = brute_force_grid([&](const Vec& u) { return obj.value_grad(u, nullptr); },
                                         Box::uniform(1, -1.5, 1.5), 300001);
  EXPECT_NEAR(r.minimizer[0], g.minimizer[0], 1e-5);
  EXPECT_LT(r.minimizer[0], 0.0);
}

TEST(StratifiedStarts, InsideBoxAndDistinct) {
  const Box box = Box::uniform(3, -1.0, 2.0);
  const auto s = stratified_starts(box, 8);
  ASSERT_EQ(s.size(), 8u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_TRUE(box.contains(s[i]));
    for (std::size_t j = 0; j < i; ++j) EXPECT_NE(s[i], s[j]);
  }
}

TEST(GridPoint, ExactEndpoints) {
  EXPECT_EQ(grid_point(-1.0, 1.0, 0, 1001), -1.0);
  EXPECT_EQ(grid_point(-1.0, 1.0, 1000, 1001), 1.0);
  EXPECT_EQ(grid_point(-1.0, 1.0, 500, 1001), 0.0);
}

TEST(BruteForceGrid, RefusesHugeGrids) {
  EXPECT_THROW(brute_force_grid([](const Vec&) { return 0.0; }, Box::uniform(4, 0, 1), 1000, 1000000),
               ContractViolation);
}
