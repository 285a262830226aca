#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcm/approximators.hpp"
#include "pcm/training.hpp"
#include "pcm/wingrock.hpp"

namespace pcm {

enum class Experiment { Case1, Case2, Gradcheck, Props };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

/// Everything a CLI run depends on. Angles are stored in radians; the config
/// file uses degrees for the wing-rock boxes and closed-loop states.
struct RunConfig {
  Experiment experiment = Experiment::Case1;
  std::uint64_t seed = 1;
  std::vector<ModelKind> models = {ModelKind::Fnn, ModelKind::Plse, ModelKind::Dlse,
                                   ModelKind::Eplse};
  bool linear_mpc = true;  // case2 only

  std::size_t samples = 2000;
  SplitFractions split;

  TrainConfig train;
  double lr_dlse = 1e-1;
  int restarts = 1;
  /// EPLSE only: epochs of fitting a plain FNN (copied into the gap net) and a
  /// PLSE+ (copied into the PCM) before the joint training. 0 disables.
  int eplse_pretrain_epochs = 0;

  NetworkConfig network;
  SolverOpts solver;

  // case1 evaluation
  long oracle_points = 100001;
  long surface_x_points = 41;
  long surface_u_points = 41;

  wingrock::WingRockConsts wingrock;
  wingrock::NmpcProblem nmpc;
  wingrock::State x0 = wingrock::State(10.0 * wingrock::kDegToRad, 45.0 * wingrock::kDegToRad);
  wingrock::State xd = wingrock::State(-25.0 * wingrock::kDegToRad, 0.0);
  double tf = 15.0;

  // gradcheck
  int grad_configs = 100;
  int vjp_instances = 50;
  int loss_grad_instances = 10;
  double grad_h = 1e-5;
  double grad_tol = 1e-5;
  double vjp_h = 1e-4;
  double vjp_tol = 1e-3;

  // props
  int theorem1_models = 200;
  int theorem1_xs = 10;
  long theorem1_grid = 1001;
  int lse_nets = 50;
  int lse_points = 1000;
  long gcm_grid = 1001;
  int gcm_minorants = 100;
  long bound_x_points = 101;
  long bound_u_points = 1001;
  int bound_train_epochs = 0;

  void validate() const;
};

/// Case defaults; `experiment` selects them.
RunConfig default_run_config(Experiment experiment);

/// Reads an INI file (key = value lines under [section] headers) over the
/// experiment's defaults. Unknown sections or keys are errors.
RunConfig load_run_config(const std::string& path, Experiment experiment);

/// The fully resolved configuration in the same INI format.
std::string to_ini(const RunConfig& config);

/// "fnn,plse" -> kinds; "linear-mpc" toggles the baseline flag instead.
void parse_model_list(const std::string& list, RunConfig& config);

}  // namespace pcm
