#include "pcm/metrics.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>

namespace pcm {

Metrics evaluate_metrics(const MinimizerFn& minimize, const std::vector<Vec>& test_x,
                         const TrueMinOracle& oracle) {
  Metrics m;
  for (const Vec& x : test_x) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult r;
    try {
      r = minimize(x);
    } catch (const std::runtime_error&) {
      m.excluded_samples += 1;
      continue;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.converged || !std::isfinite(r.value) || !r.minimizer.allFinite()) {
      m.excluded_samples += 1;
      continue;
    }
    const TrueMinimum truth = oracle(x);
    require(!truth.minimizers.empty(), "evaluate_metrics: oracle returned no minimizer");
    double dist = std::numeric_limits<double>::infinity();
    for (const Vec& u : truth.minimizers) dist = std::min(dist, (r.minimizer - u).norm());
    m.mean_minimizer_err += dist;
    m.mean_minvalue_err += std::abs(r.value - truth.value);
    m.mean_solve_seconds += secs;
    m.evaluated_samples += 1;
  }
  if (m.evaluated_samples > 0) {
    const double n = static_cast<double>(m.evaluated_samples);
    m.mean_minimizer_err /= n;
    m.mean_minvalue_err /= n;
    m.mean_solve_seconds /= n;
  }
  return m;
}

Metrics evaluate_metrics(const Approximator& model, const ModelContext& ctx,
                         const std::vector<Vec>& test_x, const TrueMinOracle& oracle) {
  return evaluate_metrics([&](const Vec& x) { return minimize_model(model, ctx, x); }, test_x,
                          oracle);
}

void write_metrics_csv_header(std::ostream& out) {
  out << "model_kind,mean_minimizer_err,mean_minvalue_err,mean_solve_seconds,excluded_samples\n";
}

void write_metrics_csv_row(std::ostream& out, const std::string& model_kind, const Metrics& m) {
  out << model_kind << ',' << std::setprecision(17) << m.mean_minimizer_err << ','
      << m.mean_minvalue_err << ',' << m.mean_solve_seconds << ',' << m.excluded_samples << '\n';
}

SuboptimalityReport suboptimality_bound_check(
    const std::function<double(const Vec& x, const Vec& u)>& f_hat,
    const std::function<Vec(const Vec& x)>& minimizer,
    const std::function<double(const Vec& x, const Vec& u)>& f_true,
    const std::vector<Vec>& x_grid, const std::vector<Vec>& u_grid, double tolerance) {
  require(!x_grid.empty() && !u_grid.empty(), "suboptimality_bound_check: empty grid");
  SuboptimalityReport rep;
  std::vector<double> grid_min(x_grid.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    for (const Vec& u : u_grid) {
      const double ft = f_true(x_grid[i], u);
      rep.eps_hat = std::max(rep.eps_hat, std::abs(f_hat(x_grid[i], u) - ft));
      grid_min[i] = std::min(grid_min[i], ft);
    }
  }
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const double sub = f_true(x_grid[i], minimizer(x_grid[i])) - grid_min[i];
    rep.max_suboptimality = std::max(rep.max_suboptimality, sub);
    const double excess = sub - 2.0 * rep.eps_hat;
    if (excess > rep.max_excess) {
      rep.max_excess = excess;
      rep.worst_x = x_grid[i];
    }
  }
  rep.holds = rep.max_excess <= tolerance;
  return rep;
}

SuboptimalityReport suboptimality_bound_check(
    const Approximator& model, const ModelContext& ctx,
    const std::function<double(const Vec& x, const Vec& u)>& f_true,
    const std::vector<Vec>& x_grid, const std::vector<Vec>& u_grid, double tolerance) {
  // Minimizers are computed once per grid x; f_hat reuses them.
  std::vector<SolveResult> stars;
  stars.reserve(x_grid.size());
  for (const Vec& x : x_grid) {
    auto r = minimize_model(model, ctx, x);
    if (!r.converged) throw SolverError("suboptimality_bound_check: model solve failed");
    stars.push_back(std::move(r));
  }
  auto find = [&](const Vec& x) -> const SolveResult& {
    for (std::size_t i = 0; i < x_grid.size(); ++i)
      if ((x_grid[i].array() == x.array()).all()) return stars[i];
    throw ContractViolation("suboptimality_bound_check: x not on the grid");
  };
  const bool needs_star = kind_of(model) == ModelKind::Eplse;
  return suboptimality_bound_check(
      [&](const Vec& x, const Vec& u) {
        return model_value(model, ctx, x, u, needs_star ? &find(x) : nullptr);
      },
      [&](const Vec& x) { return find(x).minimizer; }, f_true, x_grid, u_grid, tolerance);
}

std::vector<Vec> grid_1d(double lo, double hi, long n) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(Vec::Constant(1, grid_point(lo, hi, i, n)));
  return out;
}

}  // namespace pcm
