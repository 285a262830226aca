#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "pcm/approximators.hpp"
#include "pcm/checkpoint.hpp"

using namespace pcm;

namespace {

Vec random_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(Fnn, HandComputedTwoLayerNet) {
  Fnn net({2, 2, 1}, Activation::Tanh);
  net.weight(0) << 1.0, -1.0, 0.5, 2.0;
  net.bias(0) << 0.1, -0.2;
  net.weight(1) << 3.0, -1.0;
  net.bias(1) << 0.25;
  Vec z(2);
  z << 0.3, 0.4;
  const double h1 = std::tanh(0.3 - 0.4 + 0.1), h2 = std::tanh(0.15 + 0.8 - 0.2);
  EXPECT_NEAR(net.eval(z)[0], 3.0 * h1 - h2 + 0.25, 1e-15);
}

TEST(Fnn, ReluHiddenLayer) {
  Fnn net({1, 2, 1}, Activation::Relu);
  net.weight(0) << 1.0, -1.0;
  net.bias(0) << 0.0, 0.0;
  net.weight(1) << 1.0, 2.0;
  net.bias(1) << 0.0;
  EXPECT_DOUBLE_EQ(net.eval(Vec::Constant(1, 0.5))[0], 0.5);
  EXPECT_DOUBLE_EQ(net.eval(Vec::Constant(1, -0.5))[0], 1.0);
}

TEST(Fnn, BackwardMatchesFiniteDifferences) {
  Rng rng(3);
  Fnn net({3, 5, 4, 1}, Activation::Tanh);
  net.params() = random_vec(rng, net.num_params(), -1, 1);
  const Vec z = random_vec(rng, 3, -1, 1);
  Fnn::Tape tape;
  net.forward(z, tape);
  Vec gp = Vec::Zero(net.num_params());
  const Vec gz = net.backward(tape, Vec::Ones(1), gp);
  Fnn probe = net;
  const Vec fdp = finite_diff_grad(
      [&](const Vec& p) {
        probe.params() = p;
        return probe.eval(z)[0];
      },
      net.params(), 1e-6);
  const Vec fdz = finite_diff_grad([&](const Vec& v) { return net.eval(v)[0]; }, z, 1e-6);
  EXPECT_LT(max_rel_err(gp, fdp), 1e-7);
  EXPECT_LT(max_rel_err(gz, fdz), 1e-7);
  EXPECT_LT((net.input_jacobian(z).row(0).transpose() - gz).norm(), 1e-14);
}

TEST(MaNet, MaxOfAffineTerms) {
  MaNet ma({{Vec::Constant(1, 1.0), 0.0}, {Vec::Constant(1, -1.0), 0.0}, {Vec::Constant(1, 0.0), 0.5}});
  EXPECT_DOUBLE_EQ(ma.eval(Vec::Constant(1, 2.0)), 2.0);
  EXPECT_DOUBLE_EQ(ma.eval(Vec::Constant(1, -0.2)), 0.5);
}

TEST(LseNet, EqualTermsGiveTLogI) {
  const LseNet lse({{Vec::Constant(1, 0.0), 1.0}, {Vec::Constant(1, 0.0), 1.0}, {Vec::Constant(1, 0.0), 1.0}}, 0.5);
  EXPECT_NEAR(lse.value(Vec::Constant(1, 0.3)), 1.0 + 0.5 * std::log(3.0), 1e-15);
}

TEST(LseNet, HessianMatchesFiniteDifferenceOfGradient) {
  Rng rng(5);
  Mat a(6, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
  const LseNet lse(a, random_vec(rng, 6, -1, 1), 0.8);
  const Vec z = random_vec(rng, 3, -1, 1);
  const Mat h = lse.hessian(z);
  for (int j = 0; j < 3; ++j) {
    const Vec col = finite_diff_grad([&](const Vec& v) { return lse.eval(v).grad[j]; }, z, 1e-6);
    EXPECT_LT((h.col(j) - col).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_LT((h - h.transpose()).norm(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat> eig(h);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-15);
}

TEST(PlseNet, PlusVariantHasZeroFirstSlope) {
  PlseNet net(2, 3, 5, 1.0, {8}, Activation::Tanh, true);
  Rng rng(9);
  net.set_params(random_vec(rng, net.num_params(), -1, 1));
  EXPECT_EQ(net.first_slope_term(), 1);
  EXPECT_EQ(net.slope_nets().size(), 4u);
  EXPECT_EQ(net.offset_nets().size(), 5u);
  for (int k = 0; k < 5; ++k) {
    const LseNet s = net.slice(random_vec(rng, 2, -1, 1));
    EXPECT_EQ(s.slopes().row(0).norm(), 0.0);
    EXPECT_GT(s.slopes().bottomRows(4).norm(), 0.0);
  }
}

TEST(PlseNet, ParamRoundTrip) {
  PlseNet net(1, 2, 4, 1.0, {6, 6}, Activation::Tanh, false);
  Rng rng(2);
  const Vec p = random_vec(rng, net.num_params(), -1, 1);
  net.set_params(p);
  EXPECT_EQ(net.get_params(), p);
}

TEST(DlseNet, DifferenceOfParts) {
  Rng rng(4);
  Mat a(4, 2), b(3, 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-1, 1);
  const DlseNet d(LseNet(a, random_vec(rng, 4, -1, 1), 0.6), LseNet(b, random_vec(rng, 3, -1, 1), 0.6));
  const Vec z = random_vec(rng, 2, -1, 1);
  EXPECT_DOUBLE_EQ(d.eval(z).value, d.pos().value(z) - d.neg().value(z));
  const auto [pos, neg] = d.slice(z.head(1));
  EXPECT_NEAR(pos.value(z.tail(1)) - neg.value(z.tail(1)), d.eval(z).value, 1e-14);
}

TEST(DlseNet, MismatchedTemperaturesRejected) {
  const LseNet a({{Vec::Zero(1), 0.0}}, 1.0), b({{Vec::Zero(1), 0.0}}, 0.5);
  EXPECT_THROW(DlseNet(a, b), ContractViolation);
}

TEST(InitNetwork, DeterministicPerSeedAndWithinFanInBound) {
  NetworkConfig c;
  for (ModelKind k : {ModelKind::Fnn, ModelKind::Plse, ModelKind::PlsePlus, ModelKind::Dlse, ModelKind::Eplse}) {
    const Vec p1 = get_params(init_network(k, c, 17));
    const Vec p2 = get_params(init_network(k, c, 17));
    const Vec p3 = get_params(init_network(k, c, 18));
    EXPECT_EQ(p1, p2) << to_string(k);
    EXPECT_NE(p1, p3) << to_string(k);
    EXPECT_LE(p1.cwiseAbs().maxCoeff(), 1.0) << to_string(k);
  }
}

TEST(ModelKind, NamesRoundTrip) {
  for (ModelKind k : {ModelKind::Fnn, ModelKind::Ma, ModelKind::Lse, ModelKind::Plse,
                      ModelKind::PlsePlus, ModelKind::Dlse, ModelKind::Eplse})
    EXPECT_EQ(model_kind_from_string(to_string(k)), k);
  EXPECT_ANY_THROW(model_kind_from_string("pma"));
}

TEST(Checkpoint, BitwiseRoundTrip) {
  NetworkConfig c;
  c.x_dim = 2;
  c.u_dim = 3;
  c.hidden = {7, 5};
  c.subnet_hidden = {4};
  c.temperature = 0.3;
  for (ModelKind k : {ModelKind::Fnn, ModelKind::Plse, ModelKind::PlsePlus, ModelKind::Dlse, ModelKind::Eplse}) {
    Checkpoint ck{k, c, 123456789012345ULL, init_network(k, c, 5)};
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const Checkpoint back = read_checkpoint(ss);
    EXPECT_EQ(back.kind, k);
    EXPECT_EQ(back.seed, ck.seed);
    EXPECT_EQ(back.config.hidden, c.hidden);
    EXPECT_EQ(back.config.temperature, c.temperature);
    const Vec a = get_params(ck.model), b = get_params(back.model);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0) << to_string(k);
  }
}

TEST(Checkpoint, RejectsTruncatedInput) {
  Checkpoint ck{ModelKind::Fnn, NetworkConfig{}, 1, init_network(ModelKind::Fnn, NetworkConfig{}, 1)};
  std::stringstream ss;
  write_checkpoint(ss, ck);
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::stringstream cut(text);
  EXPECT_ANY_THROW(read_checkpoint(cut));
}
