#pragma once

#include <optional>

#include "pcm/approximators.hpp"
#include "pcm/convex_solve.hpp"

namespace pcm {

/// f(x, u) = f_PLSE+(x, u) + max(0, f_NN(x, u) - f_NN(x, u*(x))),
/// u*(x) the minimizer of the PLSE+ part over `u_box`.
struct EplseModel {
  EplseNet net;
  Box u_box;
  SolverOpts solver_opts;
};

struct EplseValue {
  double value = 0.0;
  double pcm_value = 0.0;
  double gap = 0.0;  // max(0, .) already applied
  SolveResult u_star;
};

/// Evaluates the model at (x, u). Pass a previous predict_minimizer(x) result
/// to skip the convex solve.
EplseValue eplse_eval(const EplseModel& model, const Eigen::Ref<const Vec>& x,
                      const Eigen::Ref<const Vec>& u,
                      const SolveResult* cached_u_star = nullptr);

/// The PCM minimizer; it also minimizes the full model because the gap is
/// zero there and nonnegative elsewhere. `value` is the model value at it.
SolveResult predict_minimizer(const EplseModel& model, const Eigen::Ref<const Vec>& x);

/// Any approximator together with the box and solver it is minimized with.
struct ModelContext {
  Box u_box;
  SolverOpts solver_opts;
};

/// f_hat(x, u) for any trainable approximator (MA included). EPLSE solves for
/// u*(x) unless `cached_u_star` is given.
double model_value(const Approximator& model, const ModelContext& ctx,
                   const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u,
                   const SolveResult* cached_u_star = nullptr);

/// The approximator's own minimization route: single convex solve for
/// LSE/PLSE/PLSE+/EPLSE, DCA for DLSE, multistart for FNN. `value` is
/// f_hat(x, minimizer).
SolveResult minimize_model(const Approximator& model, const ModelContext& ctx,
                           const Eigen::Ref<const Vec>& x);

}  // namespace pcm
