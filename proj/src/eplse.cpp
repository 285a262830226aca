#include "pcm/eplse.hpp"

#include <algorithm>
#include <chrono>

namespace pcm {

EplseValue eplse_eval(const EplseModel& model, const Eigen::Ref<const Vec>& x,
                      const Eigen::Ref<const Vec>& u, const SolveResult* cached_u_star) {
  require(u.size() == model.u_box.dim(), "eplse_eval: u dimension mismatch");
  EplseValue out;
  const LseNet slice = model.net.pcm.slice(x);
  if (cached_u_star != nullptr) {
    out.u_star = *cached_u_star;
  } else {
    out.u_star = solve_lse(slice, model.u_box, model.solver_opts);
    if (!out.u_star.converged) {
      throw SolverError("eplse_eval: PCM solve did not converge");
    }
  }
  out.pcm_value = slice.value(u);
  const double at_u = model.net.gap.eval(join(x, u))[0];
  const double at_star = model.net.gap.eval(join(x, out.u_star.minimizer))[0];
  out.gap = std::max(0.0, at_u - at_star);
  out.value = out.pcm_value + out.gap;
  return out;
}

SolveResult predict_minimizer(const EplseModel& model, const Eigen::Ref<const Vec>& x) {
  return solve_pcm(model.net.pcm, x, model.u_box, model.solver_opts);
}

double model_value(const Approximator& model, const ModelContext& ctx,
                   const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u,
                   const SolveResult* cached_u_star) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Fnn>) {
          return m.eval(join(x, u))[0];
        } else if constexpr (std::is_same_v<T, MaNet>) {
          return m.eval(join(x, u));
        } else if constexpr (std::is_same_v<T, LseNet>) {
          return m.value(join(x, u));
        } else if constexpr (std::is_same_v<T, PlseNet>) {
          return m.slice(x).value(u);
        } else if constexpr (std::is_same_v<T, DlseNet>) {
          return m.eval(join(x, u)).value;
        } else {
          const LseNet slice = m.pcm.slice(x);
          SolveResult star;
          if (cached_u_star == nullptr) {
            star = solve_lse(slice, ctx.u_box, ctx.solver_opts);
            if (!star.converged) throw SolverError("model_value: PCM solve did not converge");
          }
          const Vec& us = cached_u_star != nullptr ? cached_u_star->minimizer : star.minimizer;
          const double gap = m.gap.eval(join(x, u))[0] - m.gap.eval(join(x, us))[0];
          return slice.value(u) + std::max(0.0, gap);
        }
      },
      model);
}

SolveResult minimize_model(const Approximator& model, const ModelContext& ctx,
                           const Eigen::Ref<const Vec>& x) {
  return std::visit(
      [&](const auto& m) -> SolveResult {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Fnn>) {
          return solve_multistart(m, x, ctx.u_box, ctx.solver_opts);
        } else if constexpr (std::is_same_v<T, MaNet>) {
          throw ContractViolation("minimize_model: max-affine networks are not minimized here");
        } else if constexpr (std::is_same_v<T, LseNet>) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto n = x.size();
          LseNet slice(m.slopes().rightCols(m.dim() - n),
                       m.offsets() + m.slopes().leftCols(n) * x, m.temperature());
          auto r = solve_lse(slice, ctx.u_box, ctx.solver_opts);
          r.wall_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          return r;
        } else if constexpr (std::is_same_v<T, PlseNet>) {
          return solve_pcm(m, x, ctx.u_box, ctx.solver_opts);
        } else if constexpr (std::is_same_v<T, DlseNet>) {
          return solve_dca(m, ctx.u_box, x, ctx.solver_opts);
        } else {
          // value of the PCM at its minimizer equals the full model value there
          return solve_pcm(m.pcm, x, ctx.u_box, ctx.solver_opts);
        }
      },
      model);
}

}  // namespace pcm
