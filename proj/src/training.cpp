#include "pcm/training.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pcm {

namespace {

struct EplseSliceCache {
  Vec x;
  PlseNet::Slice slice;
  SolveResult u_star;
  Mat d_slopes;
  Vec d_offsets;
};

double eplse_batch(const EplseNet& net, const ModelContext& ctx,
                   const std::vector<Sample>& samples,
                   const std::vector<std::size_t>& indices, SensitivityMode mode,
                   Vec& grad, BatchStats& stats) {
  const double scale = 1.0 / static_cast<double>(indices.size());
  const auto n_pcm = net.pcm.num_params();
  auto grad_gap = grad.tail(net.gap.num_params());
  std::vector<EplseSliceCache> cache;
  double loss = 0.0;
  Vec d_out(1);
  for (auto idx : indices) {
    const Sample& s = samples[idx];
    EplseSliceCache* entry = nullptr;
    for (auto& c : cache) {
      if (c.x.size() == s.x.size() && (c.x.array() == s.x.array()).all()) {
        entry = &c;
        break;
      }
    }
    if (entry == nullptr) {
      EplseSliceCache c;
      c.x = s.x;
      c.slice = net.pcm.slice_with_tape(s.x);
      c.u_star = solve_lse(c.slice.lse, ctx.u_box, ctx.solver_opts);
      if (!c.u_star.converged) stats.unconverged_solves += 1;
      c.d_slopes = Mat::Zero(net.pcm.terms(), net.pcm.u_dim());
      c.d_offsets = Vec::Zero(net.pcm.terms());
      cache.push_back(std::move(c));
      entry = &cache.back();
    }
    Vec p;
    const double pcm_value = entry->slice.lse.eval(s.u, &p).value;
    Fnn::Tape tape_u, tape_star;
    const double nn_u = net.gap.forward(join(s.x, s.u), tape_u)[0];
    const double nn_star = net.gap.forward(join(s.x, entry->u_star.minimizer), tape_star)[0];
    const double gap = nn_u - nn_star;
    const double f_hat = pcm_value + std::max(0.0, gap);
    const double r = f_hat - s.f;
    loss += scale * r * r;
    const double adj = scale * 2.0 * r;

    entry->d_slopes.noalias() += adj * p * s.u.transpose();
    entry->d_offsets += adj * p;
    // The kink of max(0, .) at exactly zero takes the zero subgradient.
    if (gap > 0.0) {
      d_out[0] = adj;
      net.gap.backward(tape_u, d_out, grad_gap);
      d_out[0] = -adj;
      const Vec d_in = net.gap.backward(tape_star, d_out, grad_gap);
      if (mode == SensitivityMode::Implicit && entry->u_star.converged) {
        const Vec upstream = d_in.tail(net.pcm.u_dim());
        auto vjp = minimizer_vjp_coefficients(entry->slice.lse, ctx.u_box,
                                              entry->u_star.minimizer, upstream, mode);
        if (vjp.damped) stats.damped_sensitivities += 1;
        entry->d_slopes += vjp.d_slopes;
        entry->d_offsets += vjp.d_offsets;
      }
    }
  }
  for (auto& c : cache) net.pcm.backprop(c.slice, c.d_slopes, c.d_offsets, grad.head(n_pcm));
  return loss;
}

}  // namespace

double batch_loss_and_grad(const Approximator& model, const ModelContext& ctx,
                           const std::vector<Sample>& samples,
                           const std::vector<std::size_t>& indices, SensitivityMode mode,
                           Vec& grad, BatchStats* stats) {
  require(!indices.empty(), "batch_loss_and_grad: empty batch");
  grad = Vec::Zero(num_params(model));
  BatchStats local;
  const double scale = 1.0 / static_cast<double>(indices.size());
  double loss = std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        double total = 0.0;
        if constexpr (std::is_same_v<T, Fnn>) {
          Fnn::Tape tape;
          Vec d_out(1);
          for (auto idx : indices) {
            const Sample& s = samples[idx];
            const double r = m.forward(join(s.x, s.u), tape)[0] - s.f;
            total += scale * r * r;
            d_out[0] = scale * 2.0 * r;
            m.backward(tape, d_out, grad);
          }
        } else if constexpr (std::is_same_v<T, MaNet>) {
          throw ContractViolation("max-affine networks are not trained by gradient descent");
        } else if constexpr (std::is_same_v<T, LseNet>) {
          Vec p;
          for (auto idx : indices) {
            const Sample& s = samples[idx];
            const Vec z = join(s.x, s.u);
            const double r = m.eval(z, &p).value - s.f;
            total += scale * r * r;
            grad += (scale * 2.0 * r) * m.param_grad(z, p);
          }
        } else if constexpr (std::is_same_v<T, PlseNet>) {
          Vec p;
          for (auto idx : indices) {
            const Sample& s = samples[idx];
            auto slice = m.slice_with_tape(s.x);
            const double r = slice.lse.eval(s.u, &p).value - s.f;
            total += scale * r * r;
            const double adj = scale * 2.0 * r;
            m.backprop(slice, adj * p * s.u.transpose(), adj * p, grad);
          }
        } else if constexpr (std::is_same_v<T, DlseNet>) {
          Vec pp, pn;
          const auto np = m.pos().num_params();
          for (auto idx : indices) {
            const Sample& s = samples[idx];
            const Vec z = join(s.x, s.u);
            const double r = m.pos().eval(z, &pp).value - m.neg().eval(z, &pn).value - s.f;
            total += scale * r * r;
            const double adj = scale * 2.0 * r;
            grad.head(np) += adj * m.pos().param_grad(z, pp);
            grad.tail(m.neg().num_params()) -= adj * m.neg().param_grad(z, pn);
          }
        } else {
          total = eplse_batch(m, ctx, samples, indices, mode, grad, local);
        }
        return total;
      },
      model);
  if (stats != nullptr) {
    stats->unconverged_solves += local.unconverged_solves;
    stats->damped_sensitivities += local.damped_sensitivities;
  }
  return loss;
}

double mean_loss(const Approximator& model, const ModelContext& ctx,
                 const std::vector<Sample>& samples, const std::vector<std::size_t>& indices) {
  require(!indices.empty(), "mean_loss: empty index set");
  double total = 0.0;
  for (auto idx : indices) {
    const Sample& s = samples[idx];
    const double r = model_value(model, ctx, s.x, s.u) - s.f;
    total += r * r;
  }
  return total / static_cast<double>(indices.size());
}

TrainResult train_supervised(Approximator model, const Dataset& data,
                             const TrainConfig& config, const ModelContext& ctx) {
  require(config.lr > 0.0 && config.epochs >= 1 && config.batch_size >= 1,
          "train_supervised: invalid training config");
  data.validate();
  require(!data.train.empty() && !data.valid.empty(), "train_supervised: empty split");

  Rng shuffle_rng = Rng(config.seed).split("shuffle");
  Vec params = get_params(model);
  AdamState adam = AdamState::zeros(params.size());

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  Vec best_params = params;
  std::vector<std::size_t> order = data.train;
  std::vector<std::size_t> batch;
  Vec grad;
  BatchStats stats;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      const double loss =
          batch_loss_and_grad(model, ctx, data.samples, batch, config.sensitivity, grad, &stats);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite loss or gradient for " << to_string(kind_of(model)) << " at epoch "
            << epoch << ", batch starting at " << start << " (loss " << loss << ")";
        throw TrainingError(msg.str());
      }
      epoch_loss += loss * static_cast<double>(stop - start);
      adam_step_inplace(params, grad, adam, config.lr);
      set_params(model, params);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.valid_loss = mean_loss(model, ctx, data.samples, data.valid);
    if (!std::isfinite(rec.valid_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (rec.valid_loss < result.best_valid_loss) {
      result.best_valid_loss = rec.valid_loss;
      result.best_epoch = epoch;
      best_params = params;
    }
  }
  set_params(model, best_params);
  result.best = std::move(model);
  result.unconverged_solves = stats.unconverged_solves;
  result.damped_sensitivities = stats.damped_sensitivities;
  return result;
}

TrainResult train_supervised(ModelKind kind, const NetworkConfig& net_config,
                             const Dataset& data, const TrainConfig& config,
                             const ModelContext& ctx) {
  return train_supervised(init_network(kind, net_config, config.seed), data, config, ctx);
}

void write_loss_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,valid_loss\n" << std::setprecision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.valid_loss << '\n';
  }
}

}  // namespace pcm
