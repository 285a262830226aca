#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "pcm/config.hpp"
#include "pcm/metrics.hpp"

namespace pcm {

/// f(x, u) = x^2 + u^2 + sin(2 pi u) on [-1, 1] x [-1, 1].
double case1_objective(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u);

/// Grid minimum of the Case 1 objective over u at x = 0 (the minimizer does
/// not depend on x; the value shifts by x^2).
TrueMinimum case1_true_minimum(long points);

struct RunOutcome {
  std::vector<std::string> files;     // written, relative to the output directory
  std::vector<std::string> failures;  // one line per failed model or check
  bool ok() const { return failures.empty(); }
};

struct RestartRecord {
  int restart = 0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
  long unconverged_solves = 0;
};

/// A trained model with its training record.
struct TrainedModel {
  ModelKind kind;
  TrainResult result;
  int best_restart = 0;
  std::uint64_t seed = 0;
  std::vector<RestartRecord> restarts;
};

/// Seed of restart r: the configured training seed for r = 0, otherwise a
/// stream split off it.
std::uint64_t restart_seed(std::uint64_t train_seed, int r);

/// Trains `kind` config.restarts times from independent initializations and
/// keeps the one with the smallest validation loss.
TrainedModel train_with_restarts(ModelKind kind, const RunConfig& config, const Dataset& data,
                                 const ModelContext& ctx, std::ostream& log);

RunOutcome run_case1(const RunConfig& config, const std::filesystem::path& out_dir,
                     std::ostream& log);
RunOutcome run_case2(const RunConfig& config, const std::filesystem::path& out_dir,
                     std::ostream& log);
RunOutcome run_gradcheck(const RunConfig& config, const std::filesystem::path& out_dir,
                         std::ostream& log);
RunOutcome run_props(const RunConfig& config, const std::filesystem::path& out_dir,
                     std::ostream& log);

/// Dispatches on config.experiment and writes manifest.txt last.
RunOutcome run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                          std::ostream& log);

/// Library version recorded in manifests.
std::string library_version();

}  // namespace pcm
