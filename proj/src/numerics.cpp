#include "pcm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcm {

namespace {

void check_lse_args(const Eigen::Ref<const Vec>& values, double temperature) {
  if (values.size() == 0) throw std::domain_error("logsumexp: empty input");
  if (!(temperature > 0.0))
    throw std::domain_error("logsumexp: temperature must be positive");
}

}  // namespace

double logsumexp_with_weights(const Eigen::Ref<const Vec>& values,
                              double temperature, Vec& weights) {
  check_lse_args(values, temperature);
  const double vmax = values.maxCoeff();
  weights = ((values.array() - vmax) / temperature).exp().matrix();
  const double sum = weights.sum();
  weights /= sum;
  return vmax + temperature * std::log(sum);
}

double logsumexp(const Eigen::Ref<const Vec>& values, double temperature) {
  check_lse_args(values, temperature);
  const double vmax = values.maxCoeff();
  const double sum = ((values.array() - vmax) / temperature).exp().sum();
  return vmax + temperature * std::log(sum);
}

Vec softmax_weights(const Eigen::Ref<const Vec>& values, double temperature) {
  Vec w;
  logsumexp_with_weights(values, temperature, w);
  return w;
}

void adam_step_inplace(Vec& params, const Vec& grads, AdamState& state, double lr,
                       const AdamHyper& hyper) {
  require(params.size() == grads.size() &&
              params.size() == state.first_moment.size() &&
              params.size() == state.second_moment.size(),
          "adam_step: shape mismatch between params, grads and state");
  require(lr > 0.0, "adam_step: learning rate must be positive");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  state.first_moment = hyper.beta1 * state.first_moment + (1.0 - hyper.beta1) * grads;
  state.second_moment =
      hyper.beta2 * state.second_moment +
      (1.0 - hyper.beta2) * grads.cwiseProduct(grads);
  params.array() -= lr * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + hyper.eps);
}

AdamResult adam_step(const Vec& params, const Vec& grads, const AdamState& state,
                     double lr, const AdamHyper& hyper) {
  AdamResult out{params, state};
  adam_step_inplace(out.params, grads, out.state, lr, hyper);
  return out;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& point,
                     double h) {
  Vec g(point.size());
  Vec probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const double fp = f(probe);
    probe[i] = point[i] - h;
    const double fm = f(probe);
    probe[i] = point[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_rel_err(const Vec& a, const Vec& b, double floor) {
  require(a.size() == b.size(), "max_rel_err: size mismatch");
  // Scale by the larger of the two vector norms so tiny components of a large
  // gradient do not dominate through cancellation noise.
  const double scale = std::max({a.lpNorm<Eigen::Infinity>(),
                                 b.lpNorm<Eigen::Infinity>(), floor});
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

std::uint64_t Rng::mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::split(std::string_view name) const {
  // FNV-1a over the name, then folded into the parent key.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Rng(mix(key_ ^ mix(h)), 0);
}

Rng Rng::split(std::uint64_t index) const {
  return Rng(mix(key_ ^ mix(index + 0x243f6a8885a308d3ULL)), 0);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  require(n > 0, "Rng::below: n must be positive");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

}  // namespace pcm
