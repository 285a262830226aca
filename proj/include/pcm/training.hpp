#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pcm/approximators.hpp"
#include "pcm/dataset.hpp"
#include "pcm/eplse.hpp"
#include "pcm/implicit_grad.hpp"

namespace pcm {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;
  SplitFractions split;
  /// How gradients reach theta1 through u*(x; theta1) in the EPLSE gap term.
  SensitivityMode sensitivity = SensitivityMode::Implicit;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  Approximator best;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
  std::vector<EpochRecord> history;
  long unconverged_solves = 0;
  long damped_sensitivities = 0;
};

struct BatchStats {
  long unconverged_solves = 0;
  long damped_sensitivities = 0;
};

/// Mean squared error over `indices` and its gradient w.r.t. the flat
/// parameter vector. For EPLSE, u*(x) is solved once per distinct x in the
/// batch and the gap term differentiates through it per `mode`.
double batch_loss_and_grad(const Approximator& model, const ModelContext& ctx,
                           const std::vector<Sample>& samples,
                           const std::vector<std::size_t>& indices, SensitivityMode mode,
                           Vec& grad, BatchStats* stats = nullptr);

/// Mean squared error over `indices` (no gradient).
double mean_loss(const Approximator& model, const ModelContext& ctx,
                 const std::vector<Sample>& samples, const std::vector<std::size_t>& indices);

/// Mini-batch Adam from the given initial model; keeps the epoch with the
/// smallest validation loss. Deterministic given config.seed.
TrainResult train_supervised(Approximator initial, const Dataset& data,
                             const TrainConfig& config, const ModelContext& ctx);

/// Same, initializing the network from `net_config` and config.seed.
TrainResult train_supervised(ModelKind kind, const NetworkConfig& net_config,
                             const Dataset& data, const TrainConfig& config,
                             const ModelContext& ctx);

/// Columns epoch,train_loss,valid_loss.
void write_loss_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace pcm
