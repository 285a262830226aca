#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pcm/convex_solve.hpp"
#include "pcm/dataset.hpp"

namespace pcm::wingrock {

using State = Eigen::Vector2d;  // (roll angle [rad], roll rate [rad/s])

inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kRadToDeg = 57.295779513082323;

/// phi'' + omega^2 phi = mu1 phi' + b1 phi^3 + mu2 phi^2 phi' + b2 phi phi'^2 + delta_g
///
/// The defaults give a van der Pol-like roll oscillation (negative damping
/// mu1 at small amplitude, positive damping through mu2 at large amplitude)
/// with a limit cycle of roughly 2 sqrt(mu1 / -mu2) rad.
struct WingRockConsts {
  double omega = 0.15;
  double mu1 = 0.05;
  double mu2 = -0.5;
  double b1 = 0.05;
  double b2 = 0.1;
};

struct NmpcProblem {
  int horizon = 5;
  double dt = 0.1;
  int rk4_substeps = 10;
  Mat q = (Mat(2, 2) << 1.0, 0.0, 0.0, 0.1).finished();
  Mat q_terminal = (Mat(2, 2) << 1.0, 0.0, 0.0, 0.1).finished();
  Mat r = Mat::Constant(1, 1, 0.1);
  Box input_box = Box::uniform(1, -1.75, 1.75);
  Box state_box_x0 = Box((Vec(2) << -25.0 * kDegToRad, -50.0 * kDegToRad).finished(),
                         (Vec(2) << 25.0 * kDegToRad, 50.0 * kDegToRad).finished());
  Box setpoint_box = Box((Vec(2) << -25.0 * kDegToRad, 0.0).finished(),
                         (Vec(2) << 25.0 * kDegToRad, 0.0).finished());

  /// input_box repeated over the horizon.
  Box sequence_box() const;
  /// state_box_x0 x setpoint_box, the box of the learned models' parameter x.
  Box parameter_box() const;
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> inputs;
  std::vector<double> solve_seconds;
};

/// Raised when a controller returns an input outside the input box.
class InputConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

State dynamics_deriv(const State& state, double input, const WingRockConsts& c);

/// Zero-order hold over dt: classical RK4 with `substeps` equal substeps.
State step_zoh(const State& state, double input, double dt, const WingRockConsts& c,
               int substeps = 10);

/// Finite-horizon cost of u_seq from x0 toward the setpoint xd.
double nmpc_objective(const State& x0, const State& xd, const Eigen::Ref<const Vec>& u_seq,
                      const NmpcProblem& problem, const WingRockConsts& c);

/// Learned-model parameter vector (x0, xd) and its inverse.
Vec pack_parameter(const State& x0, const State& xd);
std::pair<State, State> unpack_parameter(const Eigen::Ref<const Vec>& x);

/// x0 ~ U(X0), xd ~ U(Xd), u ~ U(U^N), f = nmpc_objective. Each sample draws
/// from its own stream split off the seed, so generation order does not matter.
Dataset generate_nmpc_dataset(std::size_t n, const NmpcProblem& problem,
                              const WingRockConsts& c, std::uint64_t seed,
                              const SplitFractions& fractions = {});

/// Maps (x, xd) to an input sequence; only the first input is applied.
using Controller = std::function<Vec(const State& x, const State& xd)>;

/// Receding-horizon simulation up to tf (which must be a multiple of dt).
Trajectory closed_loop_sim(const Controller& controller, const State& x0, const State& xd,
                           double tf, const NmpcProblem& problem, const WingRockConsts& c);

/// Equilibrium input holding phi = phi_d at rest: omega^2 phi_d - b1 phi_d^3.
double equilibrium_input(double phi_d, const WingRockConsts& c);

/// Discrete-time linearization about the origin (exact ZOH of the linear model).
struct LinearModel {
  Mat a;  // 2x2
  Mat b;  // 2x1
};
LinearModel linearize_zoh(const NmpcProblem& problem, const WingRockConsts& c);

/// Quadratic cost 0.5 U^T H U + g^T U + const of the linear MPC at (x0, xd).
struct LinearMpcQp {
  Mat hessian;
  Vec gradient_at_zero;
  double constant = 0.0;
  double value(const Vec& u) const { return 0.5 * u.dot(hessian * u) + gradient_at_zero.dot(u) + constant; }
};
LinearMpcQp linear_mpc_qp(const LinearModel& model, const State& x0, const State& xd,
                          const NmpcProblem& problem, double u_eq);

/// Linear MPC on the model linearized at the origin, with the setpoint's
/// equilibrium input as the input reference; solved over the input box.
Controller linear_mpc_baseline(const NmpcProblem& problem, const WingRockConsts& c,
                               const SolverOpts& opts = {});

/// Columns t_s,phi_deg,phidot_degps,delta_g,solve_s. The final state row has
/// empty input columns.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace pcm::wingrock
