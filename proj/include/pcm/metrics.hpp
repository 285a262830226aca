#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pcm/eplse.hpp"

namespace pcm {

struct Metrics {
  double mean_minimizer_err = 0.0;  // l2 distance to the nearest true minimizer
  double mean_minvalue_err = 0.0;   // |f_hat(x, u_hat) - f*(x)|
  double mean_solve_seconds = 0.0;
  long excluded_samples = 0;
  long evaluated_samples = 0;
};

struct TrueMinimum {
  std::vector<Vec> minimizers;  // every grid minimizer (non-singleton sets allowed)
  double value = 0.0;
};

using TrueMinOracle = std::function<TrueMinimum(const Vec& x)>;
using MinimizerFn = std::function<SolveResult(const Vec& x)>;

/// Averages over test parameters. Failed or unconverged solves are excluded
/// and counted.
Metrics evaluate_metrics(const MinimizerFn& minimize, const std::vector<Vec>& test_x,
                         const TrueMinOracle& oracle);

Metrics evaluate_metrics(const Approximator& model, const ModelContext& ctx,
                         const std::vector<Vec>& test_x, const TrueMinOracle& oracle);

/// Header model_kind,mean_minimizer_err,mean_minvalue_err,mean_solve_seconds,excluded_samples
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_row(std::ostream& out, const std::string& model_kind, const Metrics& m);

struct SuboptimalityReport {
  double eps_hat = 0.0;         // max |f_hat - f| over the grid
  double max_excess = 0.0;      // max_x [f(x, u_hat) - min_grid f(x, .) - 2 eps_hat]
  double max_suboptimality = 0.0;
  Vec worst_x;
  bool holds = true;
};

/// Checks f(x, u_hat(x)) <= 2 eps_hat + min_grid f(x, .) + tolerance at every grid x.
SuboptimalityReport suboptimality_bound_check(
    const std::function<double(const Vec& x, const Vec& u)>& f_hat,
    const std::function<Vec(const Vec& x)>& minimizer,
    const std::function<double(const Vec& x, const Vec& u)>& f_true,
    const std::vector<Vec>& x_grid, const std::vector<Vec>& u_grid, double tolerance);

/// Model overload; the model's minimizer is computed once per grid x and reused.
SuboptimalityReport suboptimality_bound_check(
    const Approximator& model, const ModelContext& ctx,
    const std::function<double(const Vec& x, const Vec& u)>& f_true,
    const std::vector<Vec>& x_grid, const std::vector<Vec>& u_grid, double tolerance);

/// Regular 1D grid as a list of 1-vectors, endpoints included.
std::vector<Vec> grid_1d(double lo, double hi, long n);

}  // namespace pcm
