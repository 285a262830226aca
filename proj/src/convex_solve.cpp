#include "pcm/convex_solve.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pcm {

Box::Box(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(lower_.size() == upper_.size(), "Box: bound dimensions differ");
  require(lower_.size() >= 1, "Box: empty");
  require(lower_.allFinite() && upper_.allFinite(), "Box: bounds must be finite");
  require((lower_.array() <= upper_.array()).all(), "Box: lower > upper");
}

Box Box::uniform(int dim, double lower, double upper) {
  return Box(Vec::Constant(dim, lower), Vec::Constant(dim, upper));
}

Vec Box::project(const Eigen::Ref<const Vec>& u) const {
  require(u.size() == dim(), "Box::project: dimension mismatch");
  return u.cwiseMax(lower_).cwiseMin(upper_);
}

bool Box::contains(const Eigen::Ref<const Vec>& u) const {
  return u.size() == dim() && (u.array() >= lower_.array()).all() &&
         (u.array() <= upper_.array()).all();
}

double projected_gradient_norm(const Box& box, const Vec& u, const Vec& grad) {
  return (u - box.project(u - grad)).lpNorm<Eigen::Infinity>();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double checked(double f) {
  if (!std::isfinite(f)) throw SolverError("objective evaluated to a non-finite value");
  return f;
}

// Newton direction on the free block with the Hessian repaired to be positive definite.
Vec newton_direction(const Mat& hess, const Vec& grad, const std::vector<int>& free) {
  const auto nf = static_cast<Eigen::Index>(free.size());
  Mat h(nf, nf);
  Vec g(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    g[i] = grad[free[i]];
    for (Eigen::Index j = 0; j < nf; ++j) h(i, j) = hess(free[i], free[j]);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (h + h.transpose()));
  Vec lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  const double floor = 1e-10 * scale;
  lambda = lambda.cwiseAbs().cwiseMax(floor);
  const Mat& v = eig.eigenvectors();
  Vec step = -(v * ((v.transpose() * g).array() / lambda.array()).matrix());
  Vec d = Vec::Zero(grad.size());
  for (Eigen::Index i = 0; i < nf; ++i) d[free[i]] = step[i];
  return d;
}

Mat fd_hessian(const SmoothObjective& obj, const Vec& u, double h) {
  const auto n = u.size();
  Mat hess(n, n);
  Vec probe = u, gp, gm;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe[i] = u[i] + h;
    obj.value_grad(probe, &gp);
    probe[i] = u[i] - h;
    obj.value_grad(probe, &gm);
    probe[i] = u[i];
    hess.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace

SolveResult minimize_box(const SmoothObjective& obj, const Box& box, const Vec& start,
                         const SolverOpts& opts) {
  require(opts.grad_tol > 0.0 && opts.max_iters > 0, "SolverOpts: invalid tolerances");
  require(start.size() == box.dim(), "minimize_box: start dimension mismatch");
  const auto t0 = Clock::now();
  const double round_slack = 64.0 * std::numeric_limits<double>::epsilon();
  const Vec width = box.upper() - box.lower();

  Vec u = box.project(start);
  Vec g;
  double f = checked(obj.value_grad(u, &g));
  double pg = projected_gradient_norm(box, u, g);
  double gd_step = 1.0;

  SolveResult res;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    if (pg <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Coordinates within eps of a bound with outward gradient are held.
    std::vector<int> free;
    std::vector<char> binding(static_cast<std::size_t>(u.size()), 0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double eps = std::min(1e-3 * width[i], pg);
      const bool at_lower = u[i] <= box.lower()[i] + eps && g[i] > 0.0;
      const bool at_upper = u[i] >= box.upper()[i] - eps && g[i] < 0.0;
      if (at_lower || at_upper) {
        binding[static_cast<std::size_t>(i)] = 1;
      } else {
        free.push_back(static_cast<int>(i));
      }
    }

    const bool newton_ok = opts.use_newton && static_cast<bool>(obj.hessian) && !free.empty();
    bool accepted = false;
    for (int attempt = newton_ok ? 0 : 1; attempt < 2 && !accepted; ++attempt) {
      const bool newton = attempt == 0;
      Vec d;
      if (newton) {
        d = newton_direction(obj.hessian(u), g, free);
        for (Eigen::Index i = 0; i < u.size(); ++i)
          if (binding[static_cast<std::size_t>(i)]) d[i] = -g[i];
      } else {
        d = -gd_step * g;
      }
      double alpha = 1.0;
      for (int ls = 0; ls < 80; ++ls, alpha *= opts.armijo_shrink) {
        Vec trial = box.project(u + alpha * d);
        const double slope = g.dot(trial - u);
        if (!(slope < 0.0)) break;  // not a descent arc
        Vec g_trial;
        const double f_trial = checked(obj.value_grad(trial, &g_trial));
        bool ok = f_trial <= f + opts.armijo_c * slope;
        if (!ok && ls == 0 && f_trial - f <= round_slack * (1.0 + std::abs(f))) {
          // Decrease below rounding resolution: accept if stationarity improves.
          ok = projected_gradient_norm(box, trial, g_trial) < pg;
        }
        if (ok) {
          if (!newton) gd_step = std::min(alpha * gd_step * 2.0, 1e8);
          u = std::move(trial);
          g = std::move(g_trial);
          f = f_trial;
          accepted = true;
          break;
        }
      }
      if (!newton && !accepted) gd_step *= 1e-3;
    }
    pg = projected_gradient_norm(box, u, g);
    if (!accepted) {
      res.converged = pg <= opts.grad_tol;
      break;
    }
  }
  if (it == opts.max_iters) res.converged = pg <= opts.grad_tol;

  res.minimizer = std::move(u);
  res.value = f;
  res.iterations = it;
  res.wall_seconds = seconds_since(t0);
  return res;
}

SolveResult solve_lse(const LseNet& lse, const Box& box, const SolverOpts& opts,
                      const std::optional<Vec>& start) {
  require(lse.dim() == box.dim(), "solve_lse: box dimension mismatch");
  SmoothObjective obj;
  obj.value_grad = [&lse](const Vec& u, Vec* grad) {
    auto vg = lse.eval(u);
    if (grad != nullptr) *grad = std::move(vg.grad);
    return vg.value;
  };
  obj.hessian = [&lse](const Vec& u) { return lse.hessian(u); };
  return minimize_box(obj, box, start.value_or(box.center()), opts);
}

SolveResult solve_pcm(const PlseNet& net, const Eigen::Ref<const Vec>& x, const Box& box,
                      const SolverOpts& opts) {
  const auto t0 = Clock::now();
  auto res = solve_lse(net.slice(x), box, opts);
  res.wall_seconds = seconds_since(t0);
  return res;
}

SolveResult solve_dca(const DlseNet& net, const Box& box, const Eigen::Ref<const Vec>& x,
                      const SolverOpts& opts, std::vector<double>* trace) {
  const auto t0 = Clock::now();
  auto [pos, neg] = net.slice(x);
  require(pos.dim() == box.dim(), "solve_dca: box dimension mismatch");
  Vec u = box.center();
  double f = checked(pos.value(u) - neg.value(u));
  if (trace != nullptr) trace->assign(1, f);

  SolveResult res;
  for (int k = 0; k < opts.max_iters; ++k) {
    // Linearize -neg at u; subtracting g from every slope subtracts <g, u>
    // from the LSE because the softmax weights sum to one.
    const Vec g = neg.eval(u).grad;
    LseNet surrogate(pos.slopes().rowwise() - g.transpose(), pos.offsets(), pos.temperature());
    auto inner = solve_lse(surrogate, box, opts, u);
    const double f_new = checked(pos.value(inner.minimizer) - neg.value(inner.minimizer));
    const double moved = (inner.minimizer - u).lpNorm<Eigen::Infinity>();
    const double drop = f - f_new;
    u = std::move(inner.minimizer);
    f = f_new;
    if (trace != nullptr) trace->push_back(f);
    res.iterations = k + 1;
    if (std::abs(drop) < opts.grad_tol || moved < opts.grad_tol) {
      res.converged = inner.converged;
      break;
    }
  }
  res.minimizer = std::move(u);
  res.value = f;
  res.wall_seconds = seconds_since(t0);
  return res;
}

std::vector<Vec> stratified_starts(const Box& box, int count) {
  require(count >= 1, "stratified_starts: count must be >= 1");
  std::vector<Vec> starts;
  for (int j = 0; j < count; ++j) {
    Vec s(box.dim());
    for (int d = 0; d < box.dim(); ++d) {
      const int stratum = (j * (2 * d + 1) + d) % count;
      const double t = (stratum + 0.5) / count;
      s[d] = box.lower()[d] + t * (box.upper()[d] - box.lower()[d]);
    }
    starts.push_back(std::move(s));
  }
  return starts;
}

SolveResult solve_multistart(const SmoothObjective& objective, const Box& box,
                             const SolverOpts& opts) {
  require(opts.multistart_count >= 1, "solve_multistart: multistart_count must be >= 1");
  const auto t0 = Clock::now();
  SmoothObjective obj = objective;
  if (!obj.hessian) {
    obj.hessian = [&objective](const Vec& u) { return fd_hessian(objective, u, 1e-5); };
  }
  SolveResult best;
  bool have = false;
  int total_iters = 0;
  for (const Vec& start : stratified_starts(box, opts.multistart_count)) {
    SolveResult r;
    try {
      r = minimize_box(obj, box, start, opts);
    } catch (const SolverError&) {
      continue;
    }
    total_iters += r.iterations;
    if (!have || r.value < best.value) {
      best = std::move(r);
      have = true;
    }
  }
  if (!have) {
    best.minimizer = box.center();
    best.value = std::numeric_limits<double>::quiet_NaN();
    best.converged = false;
  }
  best.iterations = total_iters;
  best.wall_seconds = seconds_since(t0);
  return best;
}

SolveResult solve_multistart(const Fnn& net, const Eigen::Ref<const Vec>& x, const Box& box,
                             const SolverOpts& opts) {
  require(net.output_dim() == 1, "solve_multistart: network must be scalar-valued");
  require(net.input_dim() == x.size() + box.dim(), "solve_multistart: input dimension mismatch");
  const Vec xv = x;
  const auto n = x.size();
  SmoothObjective obj;
  obj.value_grad = [&net, &xv, n](const Vec& u, Vec* grad) {
    Fnn::Tape tape;
    const double v = net.forward(join(xv, u), tape)[0];
    if (grad != nullptr) {
      Vec scratch = Vec::Zero(net.num_params());
      Vec d_in = net.backward(tape, Vec::Ones(1), scratch);
      *grad = d_in.tail(d_in.size() - n);
    }
    return v;
  };
  return solve_multistart(obj, box, opts);
}

double grid_point(double lo, double hi, long i, long n) {
  if (n <= 1) return lo;
  if (i == n - 1) return hi;
  return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(n - 1));
}

SolveResult brute_force_grid(const std::function<double(const Vec&)>& f, const Box& box,
                             long points_per_dim, long max_points) {
  require(points_per_dim >= 2, "brute_force_grid: need at least 2 points per dimension");
  const auto t0 = Clock::now();
  long total = 1;
  for (int d = 0; d < box.dim(); ++d) {
    require(total <= max_points / points_per_dim, "brute_force_grid: grid too large");
    total *= points_per_dim;
  }
  std::vector<long> idx(static_cast<std::size_t>(box.dim()), 0);
  Vec u(box.dim());
  SolveResult res;
  res.value = std::numeric_limits<double>::infinity();
  for (long k = 0; k < total; ++k) {
    for (int d = 0; d < box.dim(); ++d)
      u[d] = grid_point(box.lower()[d], box.upper()[d], idx[static_cast<std::size_t>(d)],
                        points_per_dim);
    const double v = f(u);
    if (v < res.value) {
      res.value = v;
      res.minimizer = u;
    }
    for (int d = 0; d < box.dim(); ++d) {
      auto& i = idx[static_cast<std::size_t>(d)];
      if (++i < points_per_dim) break;
      i = 0;
    }
  }
  res.iterations = static_cast<int>(std::min<long>(total, std::numeric_limits<int>::max()));
  res.converged = std::isfinite(res.value);
  res.wall_seconds = seconds_since(t0);
  return res;
}

}  // namespace pcm
