#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pcm/numerics.hpp"

namespace pcm {

enum class Activation { Tanh, Relu };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Fully connected network with a linear output layer.
///
/// Parameters live in one flat vector; layer k stores its weight matrix
/// (out x in, column-major) followed by its bias. Hidden layers apply the
/// activation, the last layer does not.
class Fnn {
 public:
  struct Tape {
    // layer_out[0] is the input, layer_out[k] the (post-activation) output of layer k.
    std::vector<Vec> layer_out;
  };

  Fnn() = default;
  /// widths = {input, hidden..., output}; at least one layer.
  Fnn(std::vector<int> widths, Activation act);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return act_; }

  Eigen::Index num_params() const { return params_.size(); }
  const Vec& params() const { return params_; }
  Vec& params() { return params_; }

  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<const Vec> bias(int layer) const;
  Eigen::Map<Vec> bias(int layer);

  Vec eval(const Eigen::Ref<const Vec>& input) const;
  Vec forward(const Eigen::Ref<const Vec>& input, Tape& tape) const;

  /// Reverse pass. Adds dL/dparams into `grad_params` (length num_params)
  /// and returns dL/dinput.
  Vec backward(const Tape& tape, const Eigen::Ref<const Vec>& d_out,
               Eigen::Ref<Vec> grad_params) const;

  /// d output / d input, shape (output_dim x input_dim).
  Mat input_jacobian(const Eigen::Ref<const Vec>& input) const;

 private:
  std::vector<int> widths_;
  Activation act_ = Activation::Tanh;
  std::vector<Eigen::Index> offsets_;
  Vec params_;
};

struct FnnGrads {
  Mat input_jacobian;  // output_dim x input_dim
  Mat param_jacobian;  // output_dim x num_params
};

FnnGrads fnn_grads(const Fnn& net, const Eigen::Ref<const Vec>& input);

struct AffineTerm {
  Vec a;
  double b = 0.0;
};

/// max_i <a_i, z> + b_i
class MaNet {
 public:
  MaNet() = default;
  explicit MaNet(const std::vector<AffineTerm>& terms);
  MaNet(Mat slopes, Vec offsets);

  int terms() const { return static_cast<int>(offsets_.size()); }
  int dim() const { return static_cast<int>(slopes_.cols()); }
  const Mat& slopes() const { return slopes_; }
  const Vec& offsets() const { return offsets_; }

  double eval(const Eigen::Ref<const Vec>& z) const;

 private:
  Mat slopes_;  // terms x dim
  Vec offsets_;
};

struct ValueGrad {
  double value = 0.0;
  Vec grad;
};

/// T log sum_i exp((<a_i, z> + b_i) / T)
///
/// Also serves as the per-x slice of a PLSE network: fixing x turns the
/// subnet outputs into constant slopes and offsets over u.
class LseNet {
 public:
  LseNet() = default;
  LseNet(const std::vector<AffineTerm>& terms, double temperature);
  LseNet(Mat slopes, Vec offsets, double temperature);

  int terms() const { return static_cast<int>(offsets_.size()); }
  int dim() const { return static_cast<int>(slopes_.cols()); }
  double temperature() const { return temperature_; }
  const Mat& slopes() const { return slopes_; }
  const Vec& offsets() const { return offsets_; }
  Mat& slopes() { return slopes_; }
  Vec& offsets() { return offsets_; }

  double value(const Eigen::Ref<const Vec>& z) const;
  /// value and gradient; `weights` receives the softmax weights if non-null.
  ValueGrad eval(const Eigen::Ref<const Vec>& z, Vec* weights = nullptr) const;
  /// (1/T) (sum p_i a_i a_i^T - g g^T) with g = sum p_i a_i.
  Mat hessian(const Eigen::Ref<const Vec>& z) const;

  Eigen::Index num_params() const { return slopes_.size() + offsets_.size(); }
  /// Flat layout: slopes column-major, then offsets.
  Vec get_params() const;
  void set_params(const Eigen::Ref<const Vec>& p);
  /// dValue/dparams in the flat layout, given softmax weights at z.
  Vec param_grad(const Eigen::Ref<const Vec>& z, const Vec& weights) const;

  MaNet as_max_affine() const { return MaNet(slopes_, offsets_); }

 private:
  Mat slopes_;  // terms x dim
  Vec offsets_;
  double temperature_ = 1.0;
};

/// LSE over u whose slopes a_i(x) and offsets b_i(x) are tanh subnetworks of x.
/// In the "plus" variant the first slope subnet does not exist: a_1(x) == 0.
class PlseNet {
 public:
  /// Coefficients at a fixed x, with tapes for backpropagation.
  struct Slice {
    LseNet lse;  // over u
    std::vector<Fnn::Tape> slope_tapes;
    std::vector<Fnn::Tape> offset_tapes;
  };

  struct Eval {
    double value = 0.0;
    Vec grad_u;
    Vec grad_x;      // only with_theta
    Vec grad_theta;  // only with_theta
  };

  PlseNet() = default;
  PlseNet(int x_dim, int u_dim, int terms, double temperature,
          const std::vector<int>& subnet_hidden, Activation act, bool plus);

  int x_dim() const { return x_dim_; }
  int u_dim() const { return u_dim_; }
  int terms() const { return terms_; }
  double temperature() const { return temperature_; }
  bool plus_constrained() const { return plus_; }
  const std::vector<int>& subnet_hidden() const { return hidden_; }
  Activation activation() const { return act_; }

  /// Index of the first term that owns a slope subnet (1 for PLSE+, 0 otherwise).
  int first_slope_term() const { return plus_ ? 1 : 0; }
  const std::vector<Fnn>& slope_nets() const { return slope_nets_; }
  const std::vector<Fnn>& offset_nets() const { return offset_nets_; }
  std::vector<Fnn>& slope_nets() { return slope_nets_; }
  std::vector<Fnn>& offset_nets() { return offset_nets_; }

  LseNet slice(const Eigen::Ref<const Vec>& x) const;
  Slice slice_with_tape(const Eigen::Ref<const Vec>& x) const;

  /// Backpropagates coefficient adjoints dL/dslopes (terms x u_dim) and
  /// dL/doffsets into `grad` (length num_params) and returns dL/dx. Row 0 of
  /// d_slopes is ignored for PLSE+.
  Vec backprop(const Slice& slice, const Mat& d_slopes, const Vec& d_offsets,
                Eigen::Ref<Vec> grad) const;

  Eval eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u,
            bool with_theta = true) const;

  Eigen::Index num_params() const { return num_params_; }
  Vec get_params() const;
  void set_params(const Eigen::Ref<const Vec>& p);

 private:
  void index_params();

  int x_dim_ = 0;
  int u_dim_ = 0;
  int terms_ = 0;
  double temperature_ = 1.0;
  std::vector<int> hidden_;
  Activation act_ = Activation::Tanh;
  bool plus_ = false;
  std::vector<Fnn> slope_nets_;
  std::vector<Fnn> offset_nets_;
  std::vector<Eigen::Index> slope_offsets_;
  std::vector<Eigen::Index> offset_offsets_;
  Eigen::Index num_params_ = 0;
};

/// Difference of two LSE networks sharing a temperature.
class DlseNet {
 public:
  DlseNet() = default;
  DlseNet(LseNet pos, LseNet neg);

  const LseNet& pos() const { return pos_; }
  const LseNet& neg() const { return neg_; }
  LseNet& pos() { return pos_; }
  LseNet& neg() { return neg_; }
  double temperature() const { return pos_.temperature(); }
  int dim() const { return pos_.dim(); }

  ValueGrad eval(const Eigen::Ref<const Vec>& z) const;

  /// Fixes the first x.size() coordinates of z; returns (pos, neg) over u.
  std::pair<LseNet, LseNet> slice(const Eigen::Ref<const Vec>& x) const;

  Eigen::Index num_params() const { return pos_.num_params() + neg_.num_params(); }
  Vec get_params() const;
  void set_params(const Eigen::Ref<const Vec>& p);

 private:
  LseNet pos_;
  LseNet neg_;
};

/// PLSE+ convex minorant plus the gap network f_NN over (x, u).
struct EplseNet {
  PlseNet pcm;
  Fnn gap;

  Eigen::Index num_params() const { return pcm.num_params() + gap.num_params(); }
  Vec get_params() const;
  void set_params(const Eigen::Ref<const Vec>& p);
};

enum class ModelKind { Fnn, Ma, Lse, Plse, PlsePlus, Dlse, Eplse };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

using Approximator = std::variant<Fnn, MaNet, LseNet, PlseNet, DlseNet, EplseNet>;

ModelKind kind_of(const Approximator& model);

struct NetworkConfig {
  int x_dim = 1;
  int u_dim = 1;
  int terms = 20;
  double temperature = 1.0;
  std::vector<int> hidden = {64, 64};        // FNN baseline and the gap net
  std::vector<int> subnet_hidden = {16, 16};  // PLSE slope/offset subnets
  Activation activation = Activation::Tanh;
};

/// Random initialization, uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Approximator init_network(ModelKind kind, const NetworkConfig& config,
                          std::uint64_t seed);

Eigen::Index num_params(const Approximator& model);
Vec get_params(const Approximator& model);
void set_params(Approximator& model, const Eigen::Ref<const Vec>& p);

/// Concatenates x and u into one input vector.
Vec join(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u);

}  // namespace pcm
