#include "pcm/suites.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "pcm/eplse.hpp"
#include "pcm/gcm_oracle.hpp"
#include "pcm/implicit_grad.hpp"
#include "pcm/training.hpp"

namespace pcm {

void write_suite_csv_header(std::ostream& out) { out << "suite,cases,max_error,tolerance,pass\n"; }

void write_suite_csv_row(std::ostream& out, const SuiteResult& r) {
  out << r.name << ',' << r.cases << ',' << std::setprecision(17) << r.max_error << ','
      << r.tolerance << ',' << (r.passed ? "pass" : "fail") << '\n';
}

double gradient_error(const std::function<double(const Vec&)>& f, const Vec& at,
                      const Vec& analytic, double h) {
  return max_rel_err(analytic, finite_diff_grad(f, at, h));
}

namespace {

Vec uniform_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(hi - lo + 1)); }

std::vector<int> random_hidden(Rng& rng) {
  std::vector<int> h(static_cast<std::size_t>(pick(rng, 1, 2)));
  for (auto& w : h) w = pick(rng, 2, 6);
  return h;
}

struct Tracker {
  SuiteResult r;
  Tracker(std::string name, double tol) {
    r.name = std::move(name);
    r.tolerance = tol;
  }
  void add(double err) {
    r.cases += 1;
    if (!(err <= r.max_error)) r.max_error = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
  }
  SuiteResult done() {
    r.passed = r.cases > 0 && r.max_error < r.tolerance;
    return r;
  }
};

LseNet random_lse(Rng& rng, int dim) {
  const int terms = pick(rng, 1, 20);
  const double t = rng.uniform(0.2, 2.0);
  Mat slopes(terms, dim);
  for (Eigen::Index i = 0; i < slopes.size(); ++i) slopes.data()[i] = rng.uniform(-1.0, 1.0);
  return LseNet(slopes, uniform_vec(rng, terms, -1.0, 1.0), t);
}

PlseNet random_plse(Rng& rng, bool plus, int x_dim, int u_dim, int terms, double scale) {
  PlseNet net(x_dim, u_dim, terms, rng.uniform(0.5, 2.0), random_hidden(rng), Activation::Tanh,
              plus);
  net.set_params(uniform_vec(rng, net.num_params(), -scale, scale));
  return net;
}

}  // namespace

std::vector<SuiteResult> network_gradient_suites(const GradcheckOptions& o) {
  const Rng root = Rng(o.seed).split("gradcheck-networks");
  std::vector<SuiteResult> out;

  {
    Tracker t_in("fnn_input", o.tol), t_par("fnn_params", o.tol);
    Rng rng = root.split("fnn");
    for (int k = 0; k < o.configs; ++k) {
      std::vector<int> widths{pick(rng, 1, 4)};
      for (int w : random_hidden(rng)) widths.push_back(w);
      widths.push_back(1);
      Fnn net(widths, Activation::Tanh);
      net.params() = uniform_vec(rng, net.num_params(), -1.0, 1.0);
      const Vec z = uniform_vec(rng, widths.front(), -1.0, 1.0);
      const auto g = fnn_grads(net, z);
      t_in.add(gradient_error([&](const Vec& v) { return net.eval(v)[0]; }, z,
                              g.input_jacobian.row(0).transpose(), o.h));
      Fnn probe = net;
      t_par.add(gradient_error(
          [&](const Vec& p) {
            probe.params() = p;
            return probe.eval(z)[0];
          },
          net.params(), g.param_jacobian.row(0).transpose(), o.h));
    }
    out.push_back(t_in.done());
    out.push_back(t_par.done());
  }

  {
    Tracker t_in("lse_input", o.tol), t_par("lse_params", o.tol);
    Rng rng = root.split("lse");
    for (int k = 0; k < o.configs; ++k) {
      const LseNet net = random_lse(rng, pick(rng, 1, 4));
      const Vec z = uniform_vec(rng, net.dim(), -2.0, 2.0);
      Vec p;
      const auto vg = net.eval(z, &p);
      t_in.add(gradient_error([&](const Vec& v) { return net.value(v); }, z, vg.grad, o.h));
      LseNet probe = net;
      t_par.add(gradient_error(
          [&](const Vec& q) {
            probe.set_params(q);
            return probe.value(z);
          },
          net.get_params(), net.param_grad(z, p), o.h));
    }
    out.push_back(t_in.done());
    out.push_back(t_par.done());
  }

  for (bool plus : {false, true}) {
    const std::string name = plus ? "plse+" : "plse";
    Tracker t_u(name + "_input_u", o.tol), t_x(name + "_input_x", o.tol),
        t_par(name + "_params", o.tol);
    Rng rng = root.split(name);
    for (int k = 0; k < o.configs; ++k) {
      const PlseNet net = random_plse(rng, plus, pick(rng, 1, 3), pick(rng, 1, 3),
                                      pick(rng, 2, 6), 1.0);
      const Vec x = uniform_vec(rng, net.x_dim(), -1.0, 1.0);
      const Vec u = uniform_vec(rng, net.u_dim(), -1.0, 1.0);
      const auto ev = net.eval(x, u);
      t_u.add(gradient_error([&](const Vec& v) { return net.slice(x).value(v); }, u, ev.grad_u,
                             o.h));
      t_x.add(gradient_error([&](const Vec& v) { return net.slice(v).value(u); }, x, ev.grad_x,
                             o.h));
      PlseNet probe = net;
      t_par.add(gradient_error(
          [&](const Vec& q) {
            probe.set_params(q);
            return probe.slice(x).value(u);
          },
          net.get_params(), ev.grad_theta, o.h));
    }
    out.push_back(t_u.done());
    out.push_back(t_x.done());
    out.push_back(t_par.done());
  }

  {
    Tracker t_in("dlse_input", o.tol), t_par("dlse_params", o.tol);
    Rng rng = root.split("dlse");
    for (int k = 0; k < o.configs; ++k) {
      const int dim = pick(rng, 1, 4);
      LseNet pos = random_lse(rng, dim);
      LseNet neg = random_lse(rng, dim);
      neg = LseNet(neg.slopes(), neg.offsets(), pos.temperature());
      const DlseNet net(pos, neg);
      const Vec z = uniform_vec(rng, dim, -2.0, 2.0);
      t_in.add(gradient_error([&](const Vec& v) { return net.eval(v).value; }, z,
                              net.eval(z).grad, o.h));
      Vec pp, pn;
      net.pos().eval(z, &pp);
      net.neg().eval(z, &pn);
      Vec analytic(net.num_params());
      analytic << net.pos().param_grad(z, pp), -net.neg().param_grad(z, pn);
      DlseNet probe = net;
      t_par.add(gradient_error(
          [&](const Vec& q) {
            probe.set_params(q);
            return probe.eval(z).value;
          },
          net.get_params(), analytic, o.h));
    }
    out.push_back(t_in.done());
    out.push_back(t_par.done());
  }
  return out;
}

std::vector<SuiteResult> implicit_vjp_suites(const GradcheckOptions& o) {
  const Rng root = Rng(o.seed).split("gradcheck-vjp");
  SolverOpts tight;
  tight.grad_tol = 1e-10;
  tight.max_iters = 1000;
  std::vector<SuiteResult> out;

  {
    Tracker t("implicit_vjp_interior", o.vjp_tol);
    Rng rng = root.split("interior");
    const int max_attempts = 200 * o.vjp_instances;
    for (int attempt = 0; attempt < max_attempts && t.r.cases < o.vjp_instances; ++attempt) {
      const int u_dim = pick(rng, 1, 3);
      const PlseNet net = random_plse(rng, true, pick(rng, 1, 2), u_dim, pick(rng, 3, 8), 1.0);
      const Box box = Box::uniform(u_dim, -2.0, 2.0);
      const Vec x = uniform_vec(rng, net.x_dim(), -1.0, 1.0);
      const Vec upstream = uniform_vec(rng, u_dim, -1.0, 1.0);
      const SolveResult s = solve_pcm(net, x, box, tight);
      if (!s.converged) continue;
      // Keep the finite-difference probes away from the bounds and from
      // nearly singular Hessians.
      const double margin = std::min((s.minimizer - box.lower()).minCoeff(),
                                     (box.upper() - s.minimizer).minCoeff());
      if (margin < 0.05) continue;
      const Mat hess = net.slice(x).hessian(s.minimizer);
      Eigen::SelfAdjointEigenSolver<Mat> eig(hess);
      if (eig.eigenvalues().minCoeff() < 1e-3 * eig.eigenvalues().maxCoeff() ||
          eig.eigenvalues().minCoeff() < 1e-4)
        continue;
      const Vec analytic = minimizer_vjp(net, x, box, s, upstream, SensitivityMode::Implicit);
      PlseNet probe = net;
      const Vec fd = finite_diff_grad(
          [&](const Vec& q) {
            probe.set_params(q);
            return upstream.dot(solve_pcm(probe, x, box, tight).minimizer);
          },
          net.get_params(), o.vjp_h);
      t.add(max_rel_err(analytic, fd));
    }
    out.push_back(t.done());
  }

  {
    // Exactly zero, so the tolerance is the smallest positive double.
    Tracker t("implicit_vjp_clamped_zero", std::numeric_limits<double>::denorm_min());
    Rng rng = root.split("clamped");
    const int max_attempts = 200 * o.vjp_instances;
    for (int attempt = 0; attempt < max_attempts && t.r.cases < o.vjp_instances; ++attempt) {
      const int u_dim = pick(rng, 1, 3);
      const PlseNet net = random_plse(rng, true, pick(rng, 1, 2), u_dim, pick(rng, 3, 8), 1.0);
      const Box box = Box::uniform(u_dim, -0.05, 0.05);
      const Vec x = uniform_vec(rng, net.x_dim(), -1.0, 1.0);
      const SolveResult s = solve_pcm(net, x, box, tight);
      if (!s.converged) continue;
      const auto sens = minimizer_sensitivity(net.slice(x), box, s.minimizer,
                                              SensitivityMode::Implicit);
      Vec upstream = Vec::Zero(u_dim);
      bool any = false;
      for (int i = 0; i < u_dim; ++i) {
        if (sens.active_mask[static_cast<std::size_t>(i)]) {
          upstream[i] = rng.uniform(0.5, 1.5);
          any = true;
        }
      }
      if (!any) continue;
      const Vec v = minimizer_vjp(net, x, box, s, upstream, SensitivityMode::Implicit);
      t.add(v.cwiseAbs().maxCoeff());
    }
    out.push_back(t.done());
  }
  return out;
}

std::vector<SuiteResult> loss_gradient_suites(const GradcheckOptions& o) {
  const Rng root = Rng(o.seed).split("gradcheck-loss");
  std::vector<SuiteResult> out;
  SolverOpts tight;
  tight.grad_tol = 1e-12;
  tight.max_iters = 1000;
  for (ModelKind kind : {ModelKind::Fnn, ModelKind::Plse, ModelKind::Dlse, ModelKind::Eplse}) {
    const bool eplse = kind == ModelKind::Eplse;
    Tracker t("loss_grad_" + to_string(kind), o.loss_tol);
    Rng rng = root.split(to_string(kind));
    for (int k = 0; k < o.loss_instances; ++k) {
      NetworkConfig nc;
      nc.x_dim = pick(rng, 1, 2);
      nc.u_dim = pick(rng, 1, 2);
      Approximator model = init_network(kind, nc, rng.next_u64());
      if (eplse) {
        // Larger gap weights make the gap active on a good share of samples.
        auto& net = std::get<EplseNet>(model);
        net.gap.params() *= 3.0;
      }
      std::vector<Sample> samples(16);
      std::vector<std::size_t> idx(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].x = uniform_vec(rng, nc.x_dim, -1.0, 1.0);
        samples[i].u = uniform_vec(rng, nc.u_dim, -1.0, 1.0);
        samples[i].f = rng.uniform(-1.0, 1.0);
        idx[i] = i;
      }
      // Repeated x exercise the per-batch solve cache.
      samples[1].x = samples[0].x;
      const ModelContext ctx{Box::uniform(nc.u_dim, -1.0, 1.0), tight};
      Vec grad;
      batch_loss_and_grad(model, ctx, samples, idx, SensitivityMode::Implicit, grad);
      const Vec params = get_params(model);
      const Eigen::Index n_pcm = eplse ? std::get<EplseNet>(model).pcm.num_params() : 0;
      for (int j = 0; j < 10; ++j) {
        Eigen::Index c;
        if (eplse && j < 5) c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n_pcm)));
        else if (eplse) c = n_pcm + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(params.size() - n_pcm)));
        else c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(params.size())));
        Approximator probe = model;
        Vec scratch;
        auto loss_at = [&](double delta) {
          Vec p = params;
          p[c] += delta;
          set_params(probe, p);
          return batch_loss_and_grad(probe, ctx, samples, idx, SensitivityMode::Implicit,
                                     scratch);
        };
        const double fd = (loss_at(o.h) - loss_at(-o.h)) / (2.0 * o.h);
        t.add(rel_err(grad[c], fd, 1e-6));
      }
    }
    out.push_back(t.done());
  }
  return out;
}

SuiteResult theorem1_suite(const PropsOptions& o) {
  Rng rng = Rng(o.seed).split("props-theorem1");
  Tracker t("theorem1_global_min", o.theorem1_tol);
  t.r.max_error = -std::numeric_limits<double>::infinity();
  const Box box = Box::uniform(1, -1.0, 1.0);
  const std::vector<double> grid = [&] {
    std::vector<double> g;
    for (long i = 0; i < o.theorem1_grid; ++i) g.push_back(grid_point(-1.0, 1.0, i, o.theorem1_grid));
    return g;
  }();
  for (int m = 0; m < o.theorem1_models; ++m) {
    NetworkConfig nc;
    Approximator a = init_network(ModelKind::Eplse, nc, rng.next_u64());
    EplseModel model{std::get<EplseNet>(a), box, SolverOpts{}};
    model.net.gap.params() *= rng.uniform(0.5, 5.0);
    for (int k = 0; k < o.theorem1_xs; ++k) {
      const Vec x = Vec::Constant(1, rng.uniform(-1.0, 1.0));
      const SolveResult star = predict_minimizer(model, x);
      if (!star.converged) {
        t.add(std::numeric_limits<double>::infinity());
        continue;
      }
      double grid_min = std::numeric_limits<double>::infinity();
      Vec u(1);
      for (double g : grid) {
        u[0] = g;
        grid_min = std::min(grid_min, eplse_eval(model, x, u, &star).value);
      }
      const double at_star = eplse_eval(model, x, star.minimizer, &star).value;
      t.r.cases += 1;
      t.r.max_error = std::max(t.r.max_error, at_star - grid_min);
    }
  }
  t.r.passed = t.r.cases > 0 && t.r.max_error <= o.theorem1_tol;
  return t.r;
}

SuiteResult lse_ma_bound_suite(const PropsOptions& o) {
  Rng rng = Rng(o.seed).split("props-lse-ma");
  Tracker t("lse_ma_bound", 1e-12);
  for (int n = 0; n < o.lse_nets; ++n) {
    const LseNet lse = random_lse(rng, pick(rng, 1, 4));
    const MaNet ma = lse.as_max_affine();
    const double cap = lse.temperature() * std::log(static_cast<double>(lse.terms()));
    for (int k = 0; k < o.lse_points; ++k) {
      const Vec z = uniform_vec(rng, lse.dim(), -3.0, 3.0);
      const double d = lse.value(z) - ma.eval(z);
      t.add(std::max({0.0, -d, d - cap}));
    }
  }
  t.r.passed = t.r.cases > 0 && t.r.max_error <= t.r.tolerance;
  return t.r;
}

namespace {

GridFunction random_grid_function(Rng& rng, long points) {
  Vec us(points), fs(points);
  const int family = static_cast<int>(rng.below(3));
  const double a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1), a3 = rng.uniform(-1, 1);
  const double w1 = rng.uniform(1, 10), w2 = rng.uniform(1, 20), c = rng.uniform(-1, 1);
  for (long i = 0; i < points; ++i) {
    const double u = grid_point(-1.0, 1.0, i, points);
    us[i] = u;
    if (family == 0) fs[i] = c * u * u + a1 * std::sin(w1 * u) + a2 * std::cos(w2 * u) + a3 * u;
    else if (family == 1) fs[i] = u * u + std::sin(2.0 * M_PI * u) + c;
    else fs[i] = rng.uniform(-1.0, 1.0);
  }
  return GridFunction(us, fs);
}

}  // namespace

std::vector<SuiteResult> gcm_suites(const PropsOptions& o) {
  Rng rng = Rng(o.seed).split("props-gcm");
  Tracker below("gcm_envelope_below_f", std::numeric_limits<double>::denorm_min());
  Tracker idem("gcm_idempotent", std::numeric_limits<double>::denorm_min());
  Tracker convex("gcm_midpoint_convex", 1e-12);
  Tracker greatest("gcm_greatest", 1e-12);
  Tracker lemma("gcm_grid_min_and_argmin", std::numeric_limits<double>::denorm_min());
  for (int n = 0; n < o.gcm_functions; ++n) {
    const GridFunction g = random_grid_function(rng, o.gcm_grid);
    const GridFunction env = lower_convex_envelope(g);
    below.add(std::max(0.0, (env.fs - g.fs).maxCoeff()));
    idem.add((lower_convex_envelope(env).fs - env.fs).cwiseAbs().maxCoeff());
    convex.add(convexity_violation(env));
    for (int m = 0; m < o.gcm_minorants; ++m) {
      // max of a few affine functions, lowered until it sits below g on the grid
      const int pieces = pick(rng, 1, 4);
      Vec h = Vec::Constant(g.size(), -std::numeric_limits<double>::infinity());
      for (int p = 0; p < pieces; ++p) {
        const double slope = rng.uniform(-5.0, 5.0), icpt = rng.uniform(-1.0, 1.0);
        h = h.cwiseMax((slope * g.us.array() + icpt).matrix());
      }
      h.array() -= (h - g.fs).maxCoeff() + rng.uniform(0.0, 0.1);
      greatest.add(std::max(0.0, (h - env.fs).maxCoeff()));
    }
    const auto rep = pgcm_slice_check(
        [&g](const Vec&, double u) {
          const long i = std::lround((u + 1.0) / 2.0 * static_cast<double>(g.size() - 1));
          return g.fs[i];
        },
        Vec::Zero(1), g.us);
    lemma.add(rep.minima_equal && rep.argmin_included ? 0.0 : 1.0);
  }
  std::vector<SuiteResult> out;
  for (Tracker* t : {&below, &idem, &convex, &greatest, &lemma}) {
    t->r.passed = t->r.cases > 0 && t->r.max_error <= t->r.tolerance;
    out.push_back(t->r);
  }
  return out;
}

std::vector<SuiteResult> convexity_suites(const PropsOptions& o) {
  Rng rng = Rng(o.seed).split("props-convexity");
  std::vector<SuiteResult> out;
  const long points = 201;
  Vec us(points);
  for (long i = 0; i < points; ++i) us[i] = grid_point(-2.0, 2.0, i, points);
  for (bool plus : {false, true}) {
    Tracker t(plus ? "plse+_slice_convex" : "plse_slice_convex", 1e-12);
    for (int n = 0; n < o.lse_nets; ++n) {
      const PlseNet net = random_plse(rng, plus, pick(rng, 1, 3), 1, pick(rng, 2, 20), 2.0);
      const Vec x = uniform_vec(rng, net.x_dim(), -1.0, 1.0);
      const LseNet slice = net.slice(x);
      Vec fs(points);
      for (long i = 0; i < points; ++i) fs[i] = slice.value(Vec::Constant(1, us[i]));
      const double scale = 1.0 + fs.cwiseAbs().maxCoeff();
      t.add(convexity_violation(GridFunction(us, fs)) / scale);
    }
    t.r.passed = t.r.cases > 0 && t.r.max_error <= t.r.tolerance;
    out.push_back(t.r);
  }
  {
    Tracker t("eplse_gap_nonnegative", std::numeric_limits<double>::denorm_min());
    const Box box = Box::uniform(1, -1.0, 1.0);
    for (int n = 0; n < o.lse_nets; ++n) {
      NetworkConfig nc;
      Approximator a = init_network(ModelKind::Eplse, nc, rng.next_u64());
      EplseModel model{std::get<EplseNet>(a), box, SolverOpts{}};
      model.net.gap.params() *= rng.uniform(0.5, 5.0);
      for (int k = 0; k < 20; ++k) {
        const Vec x = Vec::Constant(1, rng.uniform(-1.0, 1.0));
        const Vec u = Vec::Constant(1, rng.uniform(-1.0, 1.0));
        const auto v = eplse_eval(model, x, u);
        t.add(std::max(0.0, v.pcm_value - v.value));
      }
    }
    t.r.passed = t.r.cases > 0 && t.r.max_error <= t.r.tolerance;
    out.push_back(t.r);
  }
  return out;
}

}  // namespace pcm
