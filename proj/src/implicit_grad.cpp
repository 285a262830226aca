#include "pcm/implicit_grad.hpp"

namespace pcm {

std::string to_string(SensitivityMode mode) {
  return mode == SensitivityMode::Implicit ? "implicit" : "detached";
}

SensitivityMode sensitivity_mode_from_string(const std::string& name) {
  if (name == "implicit") return SensitivityMode::Implicit;
  if (name == "detached") return SensitivityMode::Detached;
  throw ContractViolation("unknown sensitivity mode: " + name);
}

MinimizerSensitivity minimizer_sensitivity(const LseNet& slice, const Box& box,
                                           const Vec& u_star, SensitivityMode mode) {
  require(u_star.size() == box.dim() && slice.dim() == box.dim(),
          "minimizer_sensitivity: dimension mismatch");
  MinimizerSensitivity s;
  s.mode = mode;
  s.hessian_uu = slice.hessian(u_star);
  const Vec g = slice.eval(u_star).grad;
  s.active_mask.resize(static_cast<std::size_t>(u_star.size()));
  for (Eigen::Index i = 0; i < u_star.size(); ++i) {
    const bool lower = u_star[i] - box.lower()[i] <= kActiveBoundTol && g[i] > 0.0;
    const bool upper = box.upper()[i] - u_star[i] <= kActiveBoundTol && g[i] < 0.0;
    s.active_mask[static_cast<std::size_t>(i)] = lower || upper;
  }
  return s;
}

CoefficientAdjoint minimizer_vjp_coefficients(const LseNet& slice, const Box& box,
                                              const Vec& u_star, const Vec& upstream,
                                              SensitivityMode mode) {
  require(upstream.size() == box.dim(), "minimizer_vjp: upstream dimension mismatch");
  CoefficientAdjoint adj;
  adj.d_slopes = Mat::Zero(slice.terms(), slice.dim());
  adj.d_offsets = Vec::Zero(slice.terms());
  if (mode == SensitivityMode::Detached) return adj;

  const auto sens = minimizer_sensitivity(slice, box, u_star, mode);
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < u_star.size(); ++i)
    if (!sens.active_mask[static_cast<std::size_t>(i)]) free.push_back(i);
  if (free.empty()) return adj;

  const auto nf = static_cast<Eigen::Index>(free.size());
  Mat h(nf, nf);
  Vec rhs(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    rhs[i] = upstream[free[i]];
    for (Eigen::Index j = 0; j < nf; ++j) h(i, j) = sens.hessian_uu(free[i], free[j]);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(h);
  const Vec& lambda = eig.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  const double lmin = lambda.minCoeff();
  Vec w_free;
  if (lmin <= 0.0 || lmax / lmin > kMaxCondition) {
    adj.damped = true;
    w_free = (h + kTikhonov * Mat::Identity(nf, nf)).ldlt().solve(rhs);
  } else {
    w_free = eig.eigenvectors() *
             ((eig.eigenvectors().transpose() * rhs).array() / lambda.array()).matrix();
  }
  Vec w = Vec::Zero(u_star.size());
  for (Eigen::Index i = 0; i < nf; ++i) w[free[i]] = w_free[i];

  // G = w^T grad_u f = sum_i p_i c_i with c_i = <a_i, w>.
  //   dG/da_i = p_i w + p_i (c_i - G) u / T,   dG/db_i = p_i (c_i - G) / T.
  Vec p;
  slice.eval(u_star, &p);
  const Vec c = slice.slopes() * w;
  const double big_g = p.dot(c);
  const double t = slice.temperature();
  const Vec r = p.cwiseProduct((c.array() - big_g).matrix()) / t;
  adj.d_slopes = -(p * w.transpose() + r * u_star.transpose());
  adj.d_offsets = -r;
  return adj;
}

Vec minimizer_vjp(const PlseNet& net, const Eigen::Ref<const Vec>& x, const Box& box,
                  const SolveResult& solve, const Vec& upstream, SensitivityMode mode,
                  bool* damped) {
  require(solve.converged, "minimizer_vjp: solve did not converge");
  require(upstream.size() == net.u_dim(), "minimizer_vjp: upstream dimension mismatch");
  Vec grad = Vec::Zero(net.num_params());
  if (mode == SensitivityMode::Detached) {
    if (damped != nullptr) *damped = false;
    return grad;
  }
  auto slice = net.slice_with_tape(x);
  auto adj = minimizer_vjp_coefficients(slice.lse, box, solve.minimizer, upstream, mode);
  if (damped != nullptr) *damped = adj.damped;
  if (adj.d_slopes.isZero(0.0) && adj.d_offsets.isZero(0.0)) return grad;
  net.backprop(slice, adj.d_slopes, adj.d_offsets, grad);
  return grad;
}

}  // namespace pcm
