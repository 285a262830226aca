#pragma once

#include <vector>

#include "pcm/approximators.hpp"
#include "pcm/convex_solve.hpp"

namespace pcm {

enum class SensitivityMode { Implicit, Detached };

std::string to_string(SensitivityMode mode);
SensitivityMode sensitivity_mode_from_string(const std::string& name);

struct MinimizerSensitivity {
  std::vector<bool> active_mask;  // true where u* is clamped at a bound
  Mat hessian_uu;
  SensitivityMode mode = SensitivityMode::Implicit;
  bool damped = false;  // Tikhonov fallback was needed
};

/// Distance to a bound below which a coordinate counts as clamped.
inline constexpr double kActiveBoundTol = 1e-9;
/// Condition number above which the free-block solve is damped.
inline constexpr double kMaxCondition = 1e12;
inline constexpr double kTikhonov = 1e-8;

MinimizerSensitivity minimizer_sensitivity(const LseNet& slice, const Box& box,
                                           const Vec& u_star, SensitivityMode mode);

struct CoefficientAdjoint {
  Mat d_slopes;  // terms x u_dim
  Vec d_offsets;
  bool damped = false;
};

/// upstream^T d u*/d(slopes, offsets) for the LSE slice minimized at u_star.
///
/// On the free coordinates F, stationarity grad_F f(u*; theta) = 0 gives
/// du*_F = -H_FF^{-1} d(grad_F f), so the product with `upstream` is
/// -d/dtheta [w^T grad_u f] with H_FF w_F = upstream_F and w = 0 elsewhere.
/// Clamped coordinates do not move.
CoefficientAdjoint minimizer_vjp_coefficients(const LseNet& slice, const Box& box,
                                              const Vec& u_star, const Vec& upstream,
                                              SensitivityMode mode);

/// upstream^T d u*(x; theta1) / d theta1 for a PLSE(+) network, in the
/// network's flat parameter layout.
Vec minimizer_vjp(const PlseNet& net, const Eigen::Ref<const Vec>& x, const Box& box,
                  const SolveResult& solve, const Vec& upstream, SensitivityMode mode,
                  bool* damped = nullptr);

}  // namespace pcm
