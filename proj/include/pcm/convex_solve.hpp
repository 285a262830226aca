#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pcm/approximators.hpp"
#include "pcm/numerics.hpp"

namespace pcm {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box lower <= u <= upper.
class Box {
 public:
  Box() = default;
  Box(Vec lower, Vec upper);
  /// The same interval in every one of `dim` coordinates.
  static Box uniform(int dim, double lower, double upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  Vec center() const { return 0.5 * (lower_ + upper_); }
  Vec project(const Eigen::Ref<const Vec>& u) const;
  bool contains(const Eigen::Ref<const Vec>& u) const;

 private:
  Vec lower_;
  Vec upper_;
};

struct SolverOpts {
  double grad_tol = 1e-8;
  int max_iters = 500;
  bool use_newton = true;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int multistart_count = 8;
};

struct SolveResult {
  Vec minimizer;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

/// A smooth objective over a box. `value_grad` fills the gradient when given
/// a non-null pointer. `hessian` is optional; without it the solver takes
/// projected-gradient steps.
struct SmoothObjective {
  std::function<double(const Vec&, Vec*)> value_grad;
  std::function<Mat(const Vec&)> hessian;
};

/// ||u - P(u - g)||_inf, the first-order stationarity measure on a box.
double projected_gradient_norm(const Box& box, const Vec& u, const Vec& grad);

/// Projected Newton with Armijo backtracking along the projection arc.
/// Coordinates pinned at a bound with outward gradient are held fixed; the
/// Newton system is solved on the free block. Non-positive-definite Hessians
/// are repaired by eigenvalue clamping.
SolveResult minimize_box(const SmoothObjective& objective, const Box& box,
                         const Vec& start, const SolverOpts& opts);

/// Minimizes an LSE over u (slopes/offsets already fixed). Convex, so a
/// stationary point is a global box minimizer. Starts from the box center.
SolveResult solve_lse(const LseNet& lse, const Box& box, const SolverOpts& opts,
                      const std::optional<Vec>& start = std::nullopt);

/// The single convex solve of a PLSE / PLSE+ network at parameter x.
SolveResult solve_pcm(const PlseNet& net, const Eigen::Ref<const Vec>& x,
                      const Box& box, const SolverOpts& opts);

/// Difference-of-convex iteration for a DLSE network at parameter x.
/// `trace` (optional) receives the objective value after every outer iteration,
/// starting with the value at the box center.
SolveResult solve_dca(const DlseNet& net, const Box& box, const Eigen::Ref<const Vec>& x,
                      const SolverOpts& opts, std::vector<double>* trace = nullptr);

/// Stratified starting points: coordinate d of start j lies in stratum
/// (j * (2d + 1) + d) mod k.
std::vector<Vec> stratified_starts(const Box& box, int count);

/// Best of opts.multistart_count projected-Newton runs on a smooth FNN over (x, u).
SolveResult solve_multistart(const Fnn& net, const Eigen::Ref<const Vec>& x,
                             const Box& box, const SolverOpts& opts);

/// Same, for an arbitrary smooth objective (Hessian from finite differences
/// of the gradient if none is supplied).
SolveResult solve_multistart(const SmoothObjective& objective, const Box& box,
                             const SolverOpts& opts);

/// Exhaustive minimum over the regular grid with both endpoints included.
/// Throws ContractViolation if points_per_dim^dim exceeds `max_points`.
SolveResult brute_force_grid(const std::function<double(const Vec&)>& f, const Box& box,
                             long points_per_dim, long max_points = 200'000'000L);

/// Grid point i of n on [lo, hi]; exact at both ends.
double grid_point(double lo, double hi, long i, long n);

}  // namespace pcm
