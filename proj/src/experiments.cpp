#include "pcm/experiments.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pcm/checkpoint.hpp"
#include "pcm/suites.hpp"

namespace pcm {

namespace fs = std::filesystem;

std::string library_version() { return "0.1.0"; }

double case1_objective(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u) {
  return x[0] * x[0] + u[0] * u[0] + std::sin(2.0 * M_PI * u[0]);
}

TrueMinimum case1_true_minimum(long points) {
  require(points >= 2, "case1_true_minimum: need at least 2 points");
  const Vec x0 = Vec::Zero(1);
  TrueMinimum out;
  out.value = std::numeric_limits<double>::infinity();
  Vec u(1);
  for (long i = 0; i < points; ++i) {
    u[0] = grid_point(-1.0, 1.0, i, points);
    const double v = case1_objective(x0, u);
    if (v < out.value) {
      out.value = v;
      out.minimizers.assign(1, u);
    } else if (v == out.value) {
      out.minimizers.push_back(u);
    }
  }
  return out;
}

std::uint64_t restart_seed(std::uint64_t train_seed, int r) {
  if (r == 0) return train_seed;
  return Rng(train_seed).split("restart").split(static_cast<std::uint64_t>(r)).next_u64();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ofstream open_out(const fs::path& dir, const std::string& name, RunOutcome& outcome) {
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  outcome.files.push_back(name);
  return out;
}

Approximator pretrained_eplse(const RunConfig& config, const Dataset& data,
                              const ModelContext& ctx, std::uint64_t seed) {
  Approximator init = init_network(ModelKind::Eplse, config.network, seed);
  if (config.eplse_pretrain_epochs <= 0) return init;
  auto& net = std::get<EplseNet>(init);
  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.epochs = config.eplse_pretrain_epochs;
  net.gap = std::get<Fnn>(train_supervised(ModelKind::Fnn, config.network, data, tc, ctx).best);
  net.pcm = std::get<PlseNet>(
      train_supervised(ModelKind::PlsePlus, config.network, data, tc, ctx).best);
  return init;
}

void write_model_files(const fs::path& dir, const RunConfig& config, const TrainedModel& tm,
                       RunOutcome& outcome) {
  const std::string name = to_string(tm.kind);
  {
    auto out = open_out(dir, "loss_history_" + name + ".csv", outcome);
    write_loss_history_csv(out, tm.result.history);
  }
  save_checkpoint((dir / ("model_" + name + ".ckpt")).string(),
                  Checkpoint{tm.kind, config.network, tm.seed, tm.result.best});
  outcome.files.push_back("model_" + name + ".ckpt");
}

void write_training_summary(std::ostream& out, const std::vector<TrainedModel>& models) {
  out << "model_kind,restart,seed,best_epoch,best_valid_loss,unconverged_solves,selected\n";
  for (const auto& tm : models) {
    for (const auto& r : tm.restarts) {
      out << to_string(tm.kind) << ',' << r.restart << ',' << r.seed << ',' << r.best_epoch << ','
          << std::setprecision(17) << r.best_valid_loss << ',' << r.unconverged_solves << ','
          << (r.restart == tm.best_restart ? 1 : 0) << '\n';
    }
  }
}

std::vector<Vec> split_x(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<Vec> xs;
  xs.reserve(idx.size());
  for (std::size_t i : idx) xs.push_back(data.samples[i].x);
  return xs;
}

void write_manifest(const fs::path& dir, const RunConfig& config, const RunOutcome& outcome) {
  std::ofstream out(dir / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest.txt");
  out << "pcm manifest\n"
      << "library_version = " << library_version() << '\n'
      << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
      << EIGEN_MINOR_VERSION << '\n'
      << "compiler = " << __VERSION__ << '\n'
      << "experiment = " << to_string(config.experiment) << '\n'
      << "seed = " << config.seed << '\n'
      << "train_seed = " << config.train.seed << '\n'
      << "status = " << (outcome.ok() ? "ok" : "failed") << '\n';
  for (const auto& f : outcome.failures) out << "failure = " << f << '\n';
  for (const auto& f : outcome.files) out << "file = " << f << '\n';
  out << "\n; resolved configuration\n" << to_ini(config);
}

}  // namespace

TrainedModel train_with_restarts(ModelKind kind, const RunConfig& config, const Dataset& data,
                                 const ModelContext& ctx, std::ostream& log) {
  TrainedModel best{kind, {}, 0, 0, {}};
  double best_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    TrainConfig tc = config.train;
    tc.seed = restart_seed(config.train.seed, r);
    if (kind == ModelKind::Dlse) tc.lr = config.lr_dlse;
    const auto t0 = Clock::now();
    Approximator init = kind == ModelKind::Eplse ? pretrained_eplse(config, data, ctx, tc.seed)
                                                 : init_network(kind, config.network, tc.seed);
    TrainResult res = train_supervised(std::move(init), data, tc, ctx);
    log << to_string(kind) << " restart " << r << ": best valid loss " << res.best_valid_loss
        << " at epoch " << res.best_epoch << " (" << std::fixed << std::setprecision(1)
        << seconds_since(t0) << " s)" << std::defaultfloat << std::setprecision(6) << std::endl;
    best.restarts.push_back(
        {r, tc.seed, res.best_epoch, res.best_valid_loss, res.unconverged_solves});
    if (res.best_valid_loss < best_loss) {
      best_loss = res.best_valid_loss;
      best.result = std::move(res);
      best.best_restart = r;
      best.seed = tc.seed;
    }
  }
  return best;
}

RunOutcome run_case1(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  RunOutcome outcome;
  const Vec lo = Vec::Constant(1, -1.0), hi = Vec::Constant(1, 1.0);
  const Dataset data =
      sample_uniform_dataset(config.samples, lo, hi, lo, hi,
                             [](const Vec& x, const Vec& u) { return case1_objective(x, u); },
                             config.split, config.seed);
  {
    auto out = open_out(dir, "dataset.csv", outcome);
    write_dataset_csv(out, data, {"x"}, {"u"}, "f");
  }
  const ModelContext ctx{Box(lo, hi), config.solver};
  const TrueMinimum truth = case1_true_minimum(config.oracle_points);
  const TrueMinOracle oracle = [&truth](const Vec& x) {
    TrueMinimum t = truth;
    t.value += x[0] * x[0];
    return t;
  };
  const std::vector<Vec> test_x = split_x(data, data.test);

  auto metrics_out = open_out(dir, "metrics.csv", outcome);
  write_metrics_csv_header(metrics_out);
  std::vector<TrainedModel> trained;
  for (ModelKind kind : config.models) {
    const std::string name = to_string(kind);
    try {
      TrainedModel tm = train_with_restarts(kind, config, data, ctx, log);
      write_model_files(dir, config, tm, outcome);
      const Metrics m = evaluate_metrics(tm.result.best, ctx, test_x, oracle);
      write_metrics_csv_row(metrics_out, name, m);
      metrics_out.flush();
      log << name << ": minimizer err " << m.mean_minimizer_err << ", min-value err "
          << m.mean_minvalue_err << ", excluded " << m.excluded_samples << std::endl;

      auto surf = open_out(dir, "surface_" + name + ".csv", outcome);
      surf << "x,u,f_hat,f\n" << std::setprecision(17);
      for (long i = 0; i < config.surface_x_points; ++i) {
        const Vec x = Vec::Constant(1, grid_point(-1.0, 1.0, i, config.surface_x_points));
        std::optional<SolveResult> star;
        if (kind == ModelKind::Eplse) star = minimize_model(tm.result.best, ctx, x);
        for (long j = 0; j < config.surface_u_points; ++j) {
          const Vec u = Vec::Constant(1, grid_point(-1.0, 1.0, j, config.surface_u_points));
          surf << x[0] << ',' << u[0] << ','
               << model_value(tm.result.best, ctx, x, u, star ? &*star : nullptr) << ','
               << case1_objective(x, u) << '\n';
        }
      }

      if (kind == ModelKind::Eplse) {
        const auto rep = suboptimality_bound_check(
            tm.result.best, ctx, [](const Vec& x, const Vec& u) { return case1_objective(x, u); },
            grid_1d(-1.0, 1.0, config.bound_x_points), grid_1d(-1.0, 1.0, config.bound_u_points),
            1e-3);
        auto out = open_out(dir, "bound_eplse.csv", outcome);
        out << "eps_hat,max_excess,max_suboptimality,worst_x,tolerance,holds\n"
            << std::setprecision(17) << rep.eps_hat << ',' << rep.max_excess << ','
            << rep.max_suboptimality << ',' << (rep.worst_x.size() ? rep.worst_x[0] : 0.0)
            << ",0.001," << (rep.holds ? 1 : 0) << '\n';
        if (!rep.holds) outcome.failures.push_back("eplse: suboptimality bound violated");
      }
      trained.push_back(std::move(tm));
    } catch (const std::exception& e) {
      outcome.failures.push_back(name + ": " + e.what());
      log << name << " failed: " << e.what() << std::endl;
    }
  }
  auto summary = open_out(dir, "training_summary.csv", outcome);
  write_training_summary(summary, trained);
  return outcome;
}

namespace {

TrueMinimum nmpc_true_minimum(const Vec& x, const wingrock::NmpcProblem& problem,
                              const wingrock::WingRockConsts& c, const SolverOpts& opts) {
  const auto [x0, xd] = wingrock::unpack_parameter(x);
  const Box box = problem.sequence_box();
  // Finite-difference probes at a bound are projected back into the box.
  const auto f = [&, x0 = x0, xd = xd](const Vec& u) {
    return wingrock::nmpc_objective(x0, xd, box.project(u), problem, c);
  };
  SmoothObjective obj;
  obj.value_grad = [&f](const Vec& u, Vec* g) {
    if (g != nullptr) *g = finite_diff_grad(f, u, 1e-6);
    return f(u);
  };
  const SolveResult s = solve_multistart(obj, box, opts);
  return TrueMinimum{{s.minimizer}, s.value};
}

struct ControllerSummary {
  std::string name;
  double mean_cost = 0.0;
  wingrock::Trajectory traj;
};

}  // namespace

RunOutcome run_case2(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  using namespace wingrock;
  RunOutcome outcome;
  const auto t_data = Clock::now();
  const Dataset data = generate_nmpc_dataset(config.samples, config.nmpc, config.wingrock,
                                             config.seed, config.split);
  log << "dataset: " << data.size() << " samples (" << seconds_since(t_data) << " s)"
      << std::endl;
  {
    auto out = open_out(dir, "dataset.csv", outcome);
    std::vector<std::string> u_names;
    for (int k = 1; k <= config.nmpc.horizon; ++k) u_names.push_back("u" + std::to_string(k));
    write_dataset_csv(out, data, {"x0_phi", "x0_phidot", "xd_phi", "xd_phidot"}, u_names, "J",
                      Vec::Constant(4, kRadToDeg));
  }
  const ModelContext ctx{config.nmpc.sequence_box(), config.solver};
  const std::vector<Vec> test_x = split_x(data, data.test);

  const auto t_oracle = Clock::now();
  std::vector<TrueMinimum> truth;
  truth.reserve(test_x.size());
  for (const Vec& x : test_x) truth.push_back(nmpc_true_minimum(x, config.nmpc, config.wingrock, config.solver));
  log << "oracle: " << test_x.size() << " test parameters (" << seconds_since(t_oracle) << " s)"
      << std::endl;
  const TrueMinOracle oracle = [&](const Vec& x) {
    for (std::size_t i = 0; i < test_x.size(); ++i)
      if (test_x[i] == x) return truth[i];
    return nmpc_true_minimum(x, config.nmpc, config.wingrock, config.solver);
  };
  const auto mean_true_cost = [&](const Controller& ctrl) {
    double sum = 0.0;
    for (const Vec& x : test_x) {
      const auto [x0, xd] = unpack_parameter(x);
      sum += nmpc_objective(x0, xd, ctrl(x0, xd), config.nmpc, config.wingrock);
    }
    return sum / static_cast<double>(test_x.size());
  };

  auto metrics_out = open_out(dir, "metrics.csv", outcome);
  write_metrics_csv_header(metrics_out);
  std::vector<TrainedModel> trained;
  std::vector<ControllerSummary> loops;

  const auto run_loop = [&](const std::string& name, const Controller& ctrl) {
    try {
      ControllerSummary cs{name, mean_true_cost(ctrl),
                           closed_loop_sim(ctrl, config.x0, config.xd, config.tf, config.nmpc,
                                           config.wingrock)};
      auto out = open_out(dir, "trajectory_" + name + ".csv", outcome);
      write_trajectory_csv(out, cs.traj);
      const State& end = cs.traj.states.back();
      log << name << ": phi(tf) " << end[0] * kRadToDeg << " deg, phidot(tf) "
          << end[1] * kRadToDeg << " deg/s" << std::endl;
      loops.push_back(std::move(cs));
    } catch (const std::exception& e) {
      outcome.failures.push_back(name + " closed loop: " + e.what());
      log << name << " closed loop failed: " << e.what() << std::endl;
    }
  };

  for (ModelKind kind : config.models) {
    const std::string name = to_string(kind);
    try {
      TrainedModel tm = train_with_restarts(kind, config, data, ctx, log);
      write_model_files(dir, config, tm, outcome);
      const Metrics m = evaluate_metrics(tm.result.best, ctx, test_x, oracle);
      write_metrics_csv_row(metrics_out, name, m);
      metrics_out.flush();
      log << name << ": minimizer err " << m.mean_minimizer_err << ", min-value err "
          << m.mean_minvalue_err << ", excluded " << m.excluded_samples << std::endl;
      const Approximator& model = tm.result.best;
      run_loop(name, [&](const State& x, const State& xd) {
        const SolveResult s = minimize_model(model, ctx, pack_parameter(x, xd));
        if (!s.converged) throw SolverError("controller solve did not converge");
        return s.minimizer;
      });
      trained.push_back(std::move(tm));
    } catch (const std::exception& e) {
      outcome.failures.push_back(name + ": " + e.what());
      log << name << " failed: " << e.what() << std::endl;
    }
  }
  if (config.linear_mpc)
    run_loop("linear-mpc", linear_mpc_baseline(config.nmpc, config.wingrock, config.solver));

  {
    auto out = open_out(dir, "training_summary.csv", outcome);
    write_training_summary(out, trained);
  }
  auto out = open_out(dir, "closed_loop.csv", outcome);
  out << "controller,mean_J_test,phi_tf_deg,phidot_tf_degps,abs_phi_err_deg,max_abs_input,"
         "mean_solve_s\n"
      << std::setprecision(17);
  for (const auto& cs : loops) {
    const State& end = cs.traj.states.back();
    double max_in = 0.0, solve = 0.0;
    for (double u : cs.traj.inputs) max_in = std::max(max_in, std::abs(u));
    for (double s : cs.traj.solve_seconds) solve += s;
    out << cs.name << ',' << cs.mean_cost << ',' << end[0] * kRadToDeg << ','
        << end[1] * kRadToDeg << ',' << std::abs(end[0] - config.xd[0]) * kRadToDeg << ','
        << max_in << ',' << solve / static_cast<double>(cs.traj.solve_seconds.size()) << '\n';
  }
  return outcome;
}

namespace {

GradcheckOptions gradcheck_options(const RunConfig& c) {
  GradcheckOptions o;
  o.seed = c.seed;
  o.configs = c.grad_configs;
  o.h = c.grad_h;
  o.tol = c.grad_tol;
  o.vjp_instances = c.vjp_instances;
  o.vjp_h = c.vjp_h;
  o.vjp_tol = c.vjp_tol;
  o.loss_instances = c.loss_grad_instances;
  return o;
}

PropsOptions props_options(const RunConfig& c) {
  PropsOptions o;
  o.seed = c.seed;
  o.theorem1_models = c.theorem1_models;
  o.theorem1_xs = c.theorem1_xs;
  o.theorem1_grid = c.theorem1_grid;
  o.lse_nets = c.lse_nets;
  o.lse_points = c.lse_points;
  o.gcm_grid = c.gcm_grid;
  o.gcm_minorants = c.gcm_minorants;
  o.bound_x_points = c.bound_x_points;
  o.bound_u_points = c.bound_u_points;
  return o;
}

void report_suites(const std::vector<SuiteResult>& results, std::ostream& csv, std::ostream& log,
                   RunOutcome& outcome) {
  for (const auto& r : results) {
    write_suite_csv_row(csv, r);
    log << (r.passed ? "pass " : "FAIL ") << r.name << " (" << r.cases << " cases, max error "
        << r.max_error << ", tolerance " << r.tolerance << ")" << std::endl;
    if (!r.passed) outcome.failures.push_back(r.name);
  }
}

}  // namespace

RunOutcome run_gradcheck(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  RunOutcome outcome;
  const GradcheckOptions o = gradcheck_options(config);
  auto csv = open_out(dir, "gradcheck.csv", outcome);
  write_suite_csv_header(csv);
  report_suites(network_gradient_suites(o), csv, log, outcome);
  report_suites(implicit_vjp_suites(o), csv, log, outcome);
  report_suites(loss_gradient_suites(o), csv, log, outcome);
  return outcome;
}

RunOutcome run_props(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  RunOutcome outcome;
  const PropsOptions o = props_options(config);
  auto csv = open_out(dir, "props.csv", outcome);
  write_suite_csv_header(csv);
  report_suites({theorem1_suite(o)}, csv, log, outcome);
  report_suites({lse_ma_bound_suite(o)}, csv, log, outcome);
  report_suites(gcm_suites(o), csv, log, outcome);
  report_suites(convexity_suites(o), csv, log, outcome);

  // Suboptimality bound on a Case 1 EPLSE; bound_train_epochs = 0 leaves it untrained.
  const Vec lo = Vec::Constant(1, -1.0), hi = Vec::Constant(1, 1.0);
  const ModelContext ctx{Box(lo, hi), config.solver};
  Approximator model = init_network(ModelKind::Eplse, config.network, config.train.seed);
  if (config.bound_train_epochs > 0) {
    const Dataset data =
        sample_uniform_dataset(config.samples, lo, hi, lo, hi,
                               [](const Vec& x, const Vec& u) { return case1_objective(x, u); },
                               config.split, config.seed);
    TrainConfig tc = config.train;
    tc.epochs = config.bound_train_epochs;
    model = train_supervised(std::move(model), data, tc, ctx).best;
  }
  const auto rep = suboptimality_bound_check(
      model, ctx, [](const Vec& x, const Vec& u) { return case1_objective(x, u); },
      grid_1d(-1.0, 1.0, o.bound_x_points), grid_1d(-1.0, 1.0, o.bound_u_points), o.bound_tol);
  SuiteResult r{"theorem2_bound", static_cast<long>(o.bound_x_points), rep.max_excess,
                o.bound_tol, rep.holds};
  report_suites({r}, csv, log, outcome);
  return outcome;
}

RunOutcome run_experiment(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  config.validate();
  fs::create_directories(dir);
  RunOutcome outcome;
  switch (config.experiment) {
    case Experiment::Case1: outcome = run_case1(config, dir, log); break;
    case Experiment::Case2: outcome = run_case2(config, dir, log); break;
    case Experiment::Gradcheck: outcome = run_gradcheck(config, dir, log); break;
    case Experiment::Props: outcome = run_props(config, dir, log); break;
  }
  write_manifest(dir, config, outcome);
  outcome.files.push_back("manifest.txt");
  return outcome;
}

}  // namespace pcm
