#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pcm/wingrock.hpp"

using namespace pcm;
using namespace pcm::wingrock;

namespace {

State reference_deriv(const State& s, double d, const WingRockConsts& c) {
  const double p = s[0], r = s[1];
  return State(r, -c.omega * c.omega * p + c.mu1 * r + c.b1 * p * p * p + c.mu2 * p * p * r +
                      c.b2 * p * r * r + d);
}

// Fine-step RK4 written out independently of the library.
State reference_step(State s, double d, double dt, const WingRockConsts& c, int n) {
  const double h = dt / n;
  for (int i = 0; i < n; ++i) {
    const State k1 = reference_deriv(s, d, c);
    const State k2 = reference_deriv(s + 0.5 * h * k1, d, c);
    const State k3 = reference_deriv(s + 0.5 * h * k2, d, c);
    const State k4 = reference_deriv(s + h * k3, d, c);
    s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return s;
}

Mat taylor_expm(const Mat& m) {
  Mat sum = Mat::Identity(m.rows(), m.cols()), term = sum;
  for (int k = 1; k < 40; ++k) {
    term = term * m / k;
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(Dynamics, TrivialCases) {
  const WingRockConsts c;
  EXPECT_EQ(dynamics_deriv(State(0, 0), 0.0, c), State(0, 0));
  EXPECT_EQ(dynamics_deriv(State(0, 0.3), 0.0, c), State(0.3, c.mu1 * 0.3));
  EXPECT_EQ(dynamics_deriv(State(0, 0), 1.2, c), State(0, 1.2));
  const State s(0.2, -0.4);
  EXPECT_NEAR((dynamics_deriv(s, 0.5, c) - reference_deriv(s, 0.5, c)).norm(), 0.0, 1e-16);
}

TEST(StepZoh, OriginIsAnExactEquilibrium) {
  const WingRockConsts c;
  EXPECT_EQ(step_zoh(State(0, 0), 0.0, 0.1, c), State(0, 0));
}

TEST(StepZoh, CloseToFineStepReference) {
  const WingRockConsts c;
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const State s(rng.uniform(-0.5, 0.5), rng.uniform(-1, 1));
    const double d = rng.uniform(-1.75, 1.75);
    EXPECT_LT((step_zoh(s, d, 0.1, c) - reference_step(s, d, 0.1, c, 4000)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(StepZoh, FourthOrderConvergence) {
  WingRockConsts c;
  c.omega = 2.0;  // stiffer, so the error is well above rounding
  const State s(0.4, 1.0);
  const State ref = reference_step(s, 0.5, 0.5, c, 20000);
  const double e1 = (step_zoh(s, 0.5, 0.5, c, 4) - ref).norm();
  const double e2 = (step_zoh(s, 0.5, 0.5, c, 8) - ref).norm();
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3);
}

TEST(StepZoh, NonFiniteStateThrows) {
  WingRockConsts c;
  c.b1 = 1e6;
  EXPECT_ANY_THROW(step_zoh(State(1e3, 1e3), 0.0, 0.1, c));
}

TEST(NmpcObjective, ZeroAtEquilibrium) {
  const NmpcProblem p;
  EXPECT_EQ(nmpc_objective(State(0, 0), State(0, 0), Vec::Zero(5), p, WingRockConsts{}), 0.0);
}

TEST(NmpcObjective, PureInputPenalty) {
  NmpcProblem p;
  p.q.setZero();
  p.q_terminal.setZero();
  p.r = Mat::Identity(1, 1);
  Vec u(5);
  u << 0.1, -0.2, 0.3, 1.0, -1.5;
  EXPECT_DOUBLE_EQ(nmpc_objective(State(0.2, 0.1), State(-0.1, 0), u, p, WingRockConsts{}), u.squaredNorm());
}

TEST(NmpcObjective, TwoPassRecomputation) {
  const NmpcProblem p;
  const WingRockConsts c;
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const State x0(rng.uniform(-0.4, 0.4), rng.uniform(-0.8, 0.8)), xd(rng.uniform(-0.4, 0.4), 0.0);
    Vec u(5);
    for (int k = 0; k < 5; ++k) u[k] = rng.uniform(-1.75, 1.75);
    std::vector<State> xs{x0};
    for (int k = 0; k < 5; ++k) xs.push_back(reference_step(xs.back(), u[k], p.dt, c, p.rk4_substeps));
    double j = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vec e = xs[k] - xd;
      j += e.dot(p.q * e) + p.r(0, 0) * u[k] * u[k];
    }
    const Vec e = xs[5] - xd;
    j += e.dot(p.q_terminal * e);
    EXPECT_NEAR(nmpc_objective(x0, xd, u, p, c), j, 1e-12);
  }
}

TEST(NmpcObjective, RejectsOutOfBoxInputs) {
  EXPECT_ANY_THROW(nmpc_objective(State(0, 0), State(0, 0), Vec::Constant(5, 2.0), NmpcProblem{}, WingRockConsts{}));
}

TEST(Parameter, PackUnpackRoundTrip) {
  const State a(0.1, -0.2), b(0.3, 0.0);
  const auto [x0, xd] = unpack_parameter(pack_parameter(a, b));
  EXPECT_EQ(x0, a);
  EXPECT_EQ(xd, b);
}

TEST(Dataset, SamplesInsideBoxesSplitAndReproducible) {
  const NmpcProblem p;
  const WingRockConsts c;
  const Dataset d = generate_nmpc_dataset(10000, p, c, 5);
  EXPECT_EQ(d.train.size(), 7000u);
  EXPECT_EQ(d.valid.size(), 2000u);
  EXPECT_EQ(d.test.size(), 1000u);
  const Box xb = p.parameter_box(), ub = p.sequence_box();
  for (const Sample& s : d.samples) {
    ASSERT_TRUE(xb.contains(s.x));
    ASSERT_TRUE(ub.contains(s.u));
    ASSERT_EQ(s.x[3], 0.0);
  }
  std::ostringstream a, b;
  write_dataset_csv(a, generate_nmpc_dataset(200, p, c, 5), {"x0_phi", "x0_phidot", "xd_phi", "xd_phidot"},
                    {"u1", "u2", "u3", "u4", "u5"}, "J");
  write_dataset_csv(b, generate_nmpc_dataset(200, p, c, 5), {"x0_phi", "x0_phidot", "xd_phi", "xd_phidot"},
                    {"u1", "u2", "u3", "u4", "u5"}, "J");
  EXPECT_EQ(a.str(), b.str());
  // generation does not depend on n beyond the samples drawn
  const Dataset small = generate_nmpc_dataset(200, p, c, 5);
  EXPECT_EQ(small.samples[17].u, d.samples[17].u);
}

TEST(ClosedLoop, ZeroControllerStaysAtOrigin) {
  const NmpcProblem p;
  const Trajectory t = closed_loop_sim([](const State&, const State&) { return Vec::Zero(5); },
                                       State(0, 0), State(0, 0), 1.0, p, WingRockConsts{});
  EXPECT_EQ(t.states.size(), 11u);
  EXPECT_EQ(t.inputs.size(), 10u);
  for (const State& s : t.states) EXPECT_EQ(s, State(0, 0));
  EXPECT_NEAR(t.times.back(), 1.0, 1e-12);
}

TEST(ClosedLoop, OutOfBoxInputIsAHardError) {
  EXPECT_THROW(closed_loop_sim([](const State&, const State&) { return Vec::Constant(5, 1.8); },
                               State(0, 0), State(0, 0), 1.0, NmpcProblem{}, WingRockConsts{}),
               InputConstraintViolation);
}

TEST(ClosedLoop, TfMustBeMultipleOfDt) {
  EXPECT_ANY_THROW(closed_loop_sim([](const State&, const State&) { return Vec::Zero(5); },
                                   State(0, 0), State(0, 0), 1.05, NmpcProblem{}, WingRockConsts{}));
}

TEST(Linearize, MatchesTaylorSeriesExponential) {
  const NmpcProblem p;
  WingRockConsts c;
  c.omega = 0.7;
  const LinearModel lm = linearize_zoh(p, c);
  Mat m = Mat::Zero(3, 3);
  m(0, 1) = 1.0;
  m(1, 0) = -c.omega * c.omega;
  m(1, 1) = c.mu1;
  m(1, 2) = 1.0;
  const Mat e = taylor_expm(m * p.dt);
  EXPECT_LT((lm.a - e.topLeftCorner(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((lm.b - e.topRightCorner(2, 1)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LinearMpc, OriginGivesZeroInputs) {
  const auto ctrl = linear_mpc_baseline(NmpcProblem{}, WingRockConsts{});
  EXPECT_LT(ctrl(State(0, 0), State(0, 0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LinearMpc, UnconstrainedCaseMatchesLeastSquares) {
  const NmpcProblem p;
  const WingRockConsts c;
  const LinearModel lm = linearize_zoh(p, c);
  const State x0(1.0 * kDegToRad, -2.0 * kDegToRad), xd(0.5 * kDegToRad, 0.0);
  const double ueq = equilibrium_input(xd[0], c);
  // Stack sqrt(W)(x_k - xd) and sqrt(r)(u_k - ueq) as a dense least-squares system in U.
  const int n = p.horizon;
  Eigen::LLT<Mat> lq(p.q), lqn(p.q_terminal);
  const Mat sq = lq.matrixU(), sqn = lqn.matrixU();
  Mat a = Mat::Zero(2 * (n + 1) + n, n);
  Vec b = Vec::Zero(2 * (n + 1) + n);
  for (int k = 0; k <= n; ++k) {
    // x_k = A^k x0 + sum_{j<k} A^{k-1-j} B u_j
    Mat pw = Mat::Identity(2, 2);
    for (int i = 0; i < k; ++i) pw = lm.a * pw;
    const Mat& s = k < n ? sq : sqn;
    b.segment(2 * k, 2) = -s * (pw * x0 - xd);
    for (int j = 0; j < k; ++j) {
      Mat pj = Mat::Identity(2, 2);
      for (int i = 0; i < k - 1 - j; ++i) pj = lm.a * pj;
      a.block(2 * k, j, 2, 1) = s * pj * lm.b;
    }
  }
  const double sr = std::sqrt(p.r(0, 0));
  for (int j = 0; j < n; ++j) {
    a(2 * (n + 1) + j, j) = sr;
    b[2 * (n + 1) + j] = sr * ueq;
  }
  const Vec u_ls = a.colPivHouseholderQr().solve(b);
  ASSERT_LT(u_ls.cwiseAbs().maxCoeff(), 1.75);
  const Vec u = linear_mpc_baseline(p, c)(x0, xd);
  EXPECT_LT((u - u_ls).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LinearMpc, InputsStayInBoxFarFromOrigin) {
  const auto ctrl = linear_mpc_baseline(NmpcProblem{}, WingRockConsts{});
  const Vec u = ctrl(State(25 * kDegToRad, 50 * kDegToRad), State(-25 * kDegToRad, 0));
  EXPECT_LE(u.cwiseAbs().maxCoeff(), 1.75);
}

TEST(TrajectoryCsv, HeaderAndFinalRow) {
  Trajectory t;
  t.times = {0.0, 0.1};
  t.states = {State(0, 0), State(kDegToRad, 0)};
  t.inputs = {0.5};
  t.solve_seconds = {1e-4};
  std::ostringstream out;
  write_trajectory_csv(out, t);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t_s,phi_deg,phidot_degps,delta_g,solve_s");
  EXPECT_EQ(s.substr(s.rfind('\n', s.size() - 2) + 1), "0.10000000000000001,1,0,,\n");
}
