#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace pcm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a caller breaks a documented precondition (shape mismatch, bad config).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

/// T * log(sum_i exp(v_i / T)), shifted by max(v) so large inputs stay finite.
double logsumexp(const Eigen::Ref<const Vec>& values, double temperature);

/// exp(v_i / T) / sum_j exp(v_j / T), the gradient of logsumexp w.r.t. values.
Vec softmax_weights(const Eigen::Ref<const Vec>& values, double temperature);

/// Both at once; cheaper when a caller needs value and weights.
double logsumexp_with_weights(const Eigen::Ref<const Vec>& values,
                              double temperature, Vec& weights);

struct AdamState {
  Vec first_moment;
  Vec second_moment;
  std::int64_t step_count = 0;

  static AdamState zeros(Eigen::Index n) {
    return AdamState{Vec::Zero(n), Vec::Zero(n), 0};
  }
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamResult {
  Vec params;
  AdamState state;
};

/// One bias-corrected Adam update. Pure: returns new params and state.
AdamResult adam_step(const Vec& params, const Vec& grads, const AdamState& state,
                     double lr, const AdamHyper& hyper = {});

/// In-place variant used by the training loop; identical arithmetic.
void adam_step_inplace(Vec& params, const Vec& grads, AdamState& state, double lr,
                       const AdamHyper& hyper = {});

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& point,
                     double h);

/// |a - b| / max(|a|, |b|, floor): relative error with an absolute floor near zero.
double rel_err(double a, double b, double floor = 1e-8);
double max_rel_err(const Vec& a, const Vec& b, double floor = 1e-8);

/// Counter-based generator: output i is splitmix64(key + i * gamma).
/// Named child streams are derived from the key, so consumers that split off
/// different names never share draws regardless of call order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  Rng split(std::string_view name) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pcm
