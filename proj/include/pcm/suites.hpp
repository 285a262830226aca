#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pcm/approximators.hpp"
#include "pcm/convex_solve.hpp"

namespace pcm {

struct SuiteResult {
  std::string name;
  long cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Header suite,cases,max_error,tolerance,pass
void write_suite_csv_header(std::ostream& out);
void write_suite_csv_row(std::ostream& out, const SuiteResult& r);

/// Central-difference check of one analytic gradient: max_rel_err between
/// `analytic` and the finite-difference gradient of `f` at `at`.
double gradient_error(const std::function<double(const Vec&)>& f, const Vec& at,
                      const Vec& analytic, double h);

struct GradcheckOptions {
  std::uint64_t seed = 1;
  int configs = 100;
  double h = 1e-5;
  double tol = 1e-5;
  int vjp_instances = 50;
  double vjp_h = 1e-4;
  double vjp_tol = 1e-3;
  int loss_instances = 10;
  double loss_tol = 1e-3;
};

/// Input and parameter gradients of FNN, LSE, PLSE, PLSE+ and DLSE networks
/// at random small configurations.
std::vector<SuiteResult> network_gradient_suites(const GradcheckOptions& opts);

/// Implicit minimizer VJP of PLSE+ instances with interior minimizers
/// against finite differences through the solver, plus the exact-zero check
/// on clamped coordinates.
std::vector<SuiteResult> implicit_vjp_suites(const GradcheckOptions& opts);

/// Mini-batch loss gradients (EPLSE including the implicit path) against
/// finite differences along single parameter coordinates.
std::vector<SuiteResult> loss_gradient_suites(const GradcheckOptions& opts);

struct PropsOptions {
  std::uint64_t seed = 1;
  int theorem1_models = 200;
  int theorem1_xs = 10;
  long theorem1_grid = 1001;
  double theorem1_tol = 1e-6;
  int lse_nets = 50;
  int lse_points = 1000;
  long gcm_grid = 1001;
  int gcm_functions = 20;
  int gcm_minorants = 100;
  long bound_x_points = 101;
  long bound_u_points = 1001;
  double bound_tol = 1e-3;
};

/// eplse_eval(x, u*) <= min over a u-grid + tol for random EPLSE models.
SuiteResult theorem1_suite(const PropsOptions& opts);

/// 0 <= LSE - MA <= T ln I at random points of random networks.
SuiteResult lse_ma_bound_suite(const PropsOptions& opts);

/// Envelope <= f, idempotence, midpoint convexity, greatest-ness against
/// random convex minorants, and grid-min equality / argmin inclusion.
std::vector<SuiteResult> gcm_suites(const PropsOptions& opts);

/// Convexity in u of random PLSE / PLSE+ slices and gap nonnegativity of
/// random EPLSE models, on grids.
std::vector<SuiteResult> convexity_suites(const PropsOptions& opts);

}  // namespace pcm
