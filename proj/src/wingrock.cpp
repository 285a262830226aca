#include "pcm/wingrock.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace pcm::wingrock {

Box NmpcProblem::sequence_box() const {
  return Box(input_box.lower().replicate(horizon, 1), input_box.upper().replicate(horizon, 1));
}

Box NmpcProblem::parameter_box() const {
  Vec lo(4), hi(4);
  lo << state_box_x0.lower(), setpoint_box.lower();
  hi << state_box_x0.upper(), setpoint_box.upper();
  return Box(lo, hi);
}

void NmpcProblem::validate() const {
  require(horizon >= 1, "NmpcProblem: horizon must be >= 1");
  require(dt > 0.0, "NmpcProblem: dt must be positive");
  require(rk4_substeps >= 1, "NmpcProblem: rk4_substeps must be >= 1");
  require(q.rows() == 2 && q.cols() == 2 && q_terminal.rows() == 2 && q_terminal.cols() == 2,
          "NmpcProblem: Q and QN must be 2x2");
  require(q.isApprox(q.transpose()) && q_terminal.isApprox(q_terminal.transpose()),
          "NmpcProblem: Q and QN must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eq(q), eqn(q_terminal);
  require(eq.eigenvalues().minCoeff() >= 0.0 && eqn.eigenvalues().minCoeff() >= 0.0,
          "NmpcProblem: Q and QN must be positive semidefinite");
  require(r.rows() == 1 && r.cols() == 1 && r(0, 0) > 0.0, "NmpcProblem: R must be positive");
  require(input_box.dim() == 1 && state_box_x0.dim() == 2 && setpoint_box.dim() == 2,
          "NmpcProblem: box dimensions");
}

State dynamics_deriv(const State& s, double input, const WingRockConsts& c) {
  const double phi = s[0];
  const double rate = s[1];
  const double accel = -c.omega * c.omega * phi + c.mu1 * rate + c.b1 * phi * phi * phi +
                       c.mu2 * phi * phi * rate + c.b2 * phi * rate * rate + input;
  return State(rate, accel);
}

State step_zoh(const State& state, double input, double dt, const WingRockConsts& c,
               int substeps) {
  require(dt > 0.0 && substeps >= 1, "step_zoh: dt and substeps must be positive");
  const double h = dt / substeps;
  State s = state;
  for (int k = 0; k < substeps; ++k) {
    const State k1 = dynamics_deriv(s, input, c);
    const State k2 = dynamics_deriv(s + 0.5 * h * k1, input, c);
    const State k3 = dynamics_deriv(s + 0.5 * h * k2, input, c);
    const State k4 = dynamics_deriv(s + h * k3, input, c);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!s.allFinite()) {
    std::ostringstream msg;
    msg << "step_zoh: non-finite state from (" << state[0] << ", " << state[1]
        << ") with input " << input;
    throw std::runtime_error(msg.str());
  }
  return s;
}

double nmpc_objective(const State& x0, const State& xd, const Eigen::Ref<const Vec>& u_seq,
                      const NmpcProblem& p, const WingRockConsts& c) {
  require(u_seq.size() == p.horizon, "nmpc_objective: input sequence length != horizon");
  require(((u_seq.array() >= p.input_box.lower()[0]) && (u_seq.array() <= p.input_box.upper()[0])).all(),
          "nmpc_objective: input outside the input box");
  State x = x0;
  double cost = 0.0;
  for (int n = 0; n < p.horizon; ++n) {
    const State e = x - xd;
    cost += e.dot(p.q * e) + p.r(0, 0) * u_seq[n] * u_seq[n];
    x = step_zoh(x, u_seq[n], p.dt, c, p.rk4_substeps);
  }
  const State e = x - xd;
  return cost + e.dot(p.q_terminal * e);
}

Vec pack_parameter(const State& x0, const State& xd) {
  Vec x(4);
  x << x0, xd;
  return x;
}

std::pair<State, State> unpack_parameter(const Eigen::Ref<const Vec>& x) {
  require(x.size() == 4, "unpack_parameter: expected (x0, xd)");
  return {State(x[0], x[1]), State(x[2], x[3])};
}

Dataset generate_nmpc_dataset(std::size_t n, const NmpcProblem& p, const WingRockConsts& c,
                              std::uint64_t seed, const SplitFractions& fractions) {
  require(n >= 1, "generate_nmpc_dataset: n must be >= 1");
  p.validate();
  const Rng root(seed);
  const Rng streams = root.split("data");
  const Box xbox = p.parameter_box();
  const Box ubox = p.sequence_box();
  Dataset data;
  data.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng = streams.split(static_cast<std::uint64_t>(k));
    Sample& s = data.samples[k];
    s.x.resize(4);
    s.u.resize(p.horizon);
    for (int i = 0; i < 4; ++i) s.x[i] = rng.uniform(xbox.lower()[i], xbox.upper()[i]);
    for (int i = 0; i < p.horizon; ++i) s.u[i] = rng.uniform(ubox.lower()[i], ubox.upper()[i]);
    const auto [x0, xd] = unpack_parameter(s.x);
    s.f = nmpc_objective(x0, xd, s.u, p, c);
  }
  assign_split(data, fractions, root.split("split"));
  return data;
}

Trajectory closed_loop_sim(const Controller& controller, const State& x0, const State& xd,
                           double tf, const NmpcProblem& p, const WingRockConsts& c) {
  require(tf > 0.0, "closed_loop_sim: tf must be positive");
  const long steps = std::lround(tf / p.dt);
  require(std::abs(static_cast<double>(steps) * p.dt - tf) <= 1e-9,
          "closed_loop_sim: tf must be a multiple of dt");
  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps + 1));
  traj.states.reserve(static_cast<std::size_t>(steps + 1));
  State x = x0;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (long k = 0; k < steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const Vec u_seq = controller(x, xd);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    require(u_seq.size() >= 1, "closed_loop_sim: controller returned no input");
    const double u = u_seq[0];
    if (!(u >= p.input_box.lower()[0] && u <= p.input_box.upper()[0])) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "controller input " << u << " outside ["
          << p.input_box.lower()[0] << ", " << p.input_box.upper()[0] << "] at t = "
          << static_cast<double>(k) * p.dt;
      throw InputConstraintViolation(msg.str());
    }
    x = step_zoh(x, u, p.dt, c, p.rk4_substeps);
    traj.inputs.push_back(u);
    traj.solve_seconds.push_back(secs);
    traj.times.push_back(static_cast<double>(k + 1) * p.dt);
    traj.states.push_back(x);
  }
  return traj;
}

double equilibrium_input(double phi_d, const WingRockConsts& c) {
  return c.omega * c.omega * phi_d - c.b1 * phi_d * phi_d * phi_d;
}

LinearModel linearize_zoh(const NmpcProblem& p, const WingRockConsts& c) {
  // Augmented-matrix exponential: expm([[A, B], [0, 0]] dt) = [[Ad, Bd], [0, I]].
  Mat m = Mat::Zero(3, 3);
  m(0, 1) = 1.0;
  m(1, 0) = -c.omega * c.omega;
  m(1, 1) = c.mu1;
  m(1, 2) = 1.0;
  const Mat e = (m * p.dt).exp();
  return LinearModel{e.topLeftCorner(2, 2), e.topRightCorner(2, 1)};
}

LinearMpcQp linear_mpc_qp(const LinearModel& model, const State& x0, const State& xd,
                          const NmpcProblem& p, double u_eq) {
  const int n = p.horizon;
  // Predicted states x_k = free_k + sens_k U for k = 0..N.
  std::vector<Vec> free(static_cast<std::size_t>(n + 1));
  std::vector<Mat> sens(static_cast<std::size_t>(n + 1));
  free[0] = x0;
  sens[0] = Mat::Zero(2, n);
  for (int k = 0; k < n; ++k) {
    free[k + 1] = model.a * free[k];
    sens[k + 1] = model.a * sens[k];
    sens[k + 1].col(k) += model.b.col(0);
  }
  LinearMpcQp qp;
  qp.hessian = Mat::Zero(n, n);
  qp.gradient_at_zero = Vec::Zero(n);
  qp.constant = 0.0;
  for (int k = 0; k <= n; ++k) {
    const Mat& w = k < n ? p.q : p.q_terminal;
    const Vec e = free[k] - Vec(xd);
    qp.hessian += 2.0 * sens[k].transpose() * w * sens[k];
    qp.gradient_at_zero += 2.0 * sens[k].transpose() * w * e;
    qp.constant += e.dot(w * e);
  }
  const double r = p.r(0, 0);
  qp.hessian += 2.0 * r * Mat::Identity(n, n);
  qp.gradient_at_zero -= Vec::Constant(n, 2.0 * r * u_eq);
  qp.constant += n * r * u_eq * u_eq;
  return qp;
}

Controller linear_mpc_baseline(const NmpcProblem& p, const WingRockConsts& c,
                               const SolverOpts& opts) {
  p.validate();
  require(std::isfinite(c.omega) && std::isfinite(c.mu1) && std::isfinite(c.mu2) &&
              std::isfinite(c.b1) && std::isfinite(c.b2),
          "linear_mpc_baseline: constants must be finite");
  const LinearModel model = linearize_zoh(p, c);
  const Box box = p.sequence_box();
  return [model, box, p, c, opts](const State& x, const State& xd) -> Vec {
    const LinearMpcQp qp = linear_mpc_qp(model, x, xd, p, equilibrium_input(xd[0], c));
    SmoothObjective obj;
    obj.value_grad = [&qp](const Vec& u, Vec* grad) {
      if (grad != nullptr) *grad = qp.hessian * u + qp.gradient_at_zero;
      return qp.value(u);
    };
    obj.hessian = [&qp](const Vec&) { return qp.hessian; };
    auto res = minimize_box(obj, box, box.center(), opts);
    if (!res.converged) throw SolverError("linear MPC: QP solve did not converge");
    return res.minimizer;
  };
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t_s,phi_deg,phidot_degps,delta_g,solve_s\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << traj.times[k] << ',' << traj.states[k][0] * kRadToDeg << ','
        << traj.states[k][1] * kRadToDeg << ',';
    if (k < traj.inputs.size()) out << traj.inputs[k] << ',' << traj.solve_seconds[k];
    else out << ',';
    out << '\n';
  }
}

}  // namespace pcm::wingrock
