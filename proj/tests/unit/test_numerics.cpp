#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pcm/numerics.hpp"

using namespace pcm;

TEST(LogSumExp, MatchesNaiveSumForModerateValues) {
  Vec v(4);
  v << 0.3, -1.2, 2.0, 0.7;
  for (double t : {0.25, 1.0, 3.0}) {
    double naive = 0.0;
    for (int i = 0; i < v.size(); ++i) naive += std::exp(v[i] / t);
    EXPECT_NEAR(logsumexp(v, t), t * std::log(naive), 1e-14);
  }
}

TEST(LogSumExp, StaysFiniteForLargeInputs) {
  const Vec v = Vec::Constant(3, 1000.0);
  EXPECT_DOUBLE_EQ(logsumexp(v, 1.0), 1000.0 + std::log(3.0));
  const Vec w = Vec::Constant(3, -1000.0);
  EXPECT_DOUBLE_EQ(logsumexp(w, 1.0), -1000.0 + std::log(3.0));
}

TEST(LogSumExp, WeightsAreGradient) {
  Vec v(3);
  v << 0.1, 0.5, -0.4;
  Vec w;
  const double value = logsumexp_with_weights(v, 0.7, w);
  EXPECT_DOUBLE_EQ(value, logsumexp(v, 0.7));
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  const Vec fd = finite_diff_grad([](const Vec& z) { return logsumexp(z, 0.7); }, v, 1e-6);
  EXPECT_LT((fd - w).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((softmax_weights(v, 0.7) - w).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Vec p(3), g(3);
  p << 1.0, -2.0, 0.5;
  g << 0.3, -4.0, 1e-3;
  const auto r = adam_step(p, g, AdamState::zeros(3), 0.01);
  // bias-corrected moments after one step are g and g^2
  for (int i = 0; i < 3; ++i) {
    const double expected = p[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(r.params[i], expected, 1e-15);
  }
  EXPECT_EQ(r.state.step_count, 1);
}

TEST(Adam, InPlaceMatchesPureStep) {
  Vec p = Vec::LinSpaced(5, -1.0, 1.0);
  AdamState s = AdamState::zeros(5);
  Vec q = p;
  AdamState t = s;
  for (int k = 0; k < 10; ++k) {
    const Vec g = (p.array() * (k + 1)).sin().matrix();
    const auto r = adam_step(p, g, s, 1e-3);
    p = r.params;
    s = r.state;
    adam_step_inplace(q, g, t, 1e-3);
    ASSERT_EQ(p, q);
  }
}

TEST(FiniteDiff, ExactOnQuadratics) {
  const auto f = [](const Vec& z) { return 3.0 * z[0] * z[0] - z[0] * z[1] + 2.0 * z[1]; };
  Vec z(2);
  z << 0.4, -1.5;
  const Vec g = finite_diff_grad(f, z, 1e-3);
  EXPECT_NEAR(g[0], 6.0 * 0.4 + 1.5, 1e-10);
  EXPECT_NEAR(g[1], -0.4 + 2.0, 1e-10);
}

TEST(RelErr, UsesFloorNearZero) {
  EXPECT_NEAR(rel_err(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(rel_err(0.0, 1e-10, 1e-8), 1e-2);
}

TEST(Rng, DeterministicAndSplitStreamsDiffer) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng x = Rng(7).split("data"), y = Rng(7).split("init");
  EXPECT_NE(x.next_u64(), y.next_u64());
  // a split stream does not depend on draws taken from the parent
  Rng parent(9);
  const Rng before = parent.split(3);
  parent.next_u64();
  Rng s1 = before, s2 = parent.split(3);
  EXPECT_EQ(s1.next_u64(), s2.next_u64());
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng r(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.below(6);
    ASSERT_LT(k, 6u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 6u);
}
