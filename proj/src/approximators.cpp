#include "pcm/approximators.hpp"

#include <cmath>
#include <stdexcept>

namespace pcm {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ContractViolation("unknown activation: " + name);
}

// ---------------------------------------------------------------------------
// Fnn

Fnn::Fnn(std::vector<int> widths, Activation act)
    : widths_(std::move(widths)), act_(act) {
  require(widths_.size() >= 2, "Fnn: need at least input and output widths");
  for (int w : widths_) require(w >= 1, "Fnn: layer widths must be positive");
  Eigen::Index n = 0;
  for (int k = 0; k < num_layers(); ++k) {
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(widths_[k + 1]) * (widths_[k] + 1);
  }
  params_ = Vec::Zero(n);
}

Eigen::Map<const Mat> Fnn::weight(int layer) const {
  return {params_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<Mat> Fnn::weight(int layer) {
  return {params_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<const Vec> Fnn::bias(int layer) const {
  return {params_.data() + offsets_[layer] +
              static_cast<Eigen::Index>(widths_[layer + 1]) * widths_[layer],
          widths_[layer + 1]};
}
Eigen::Map<Vec> Fnn::bias(int layer) {
  return {params_.data() + offsets_[layer] +
              static_cast<Eigen::Index>(widths_[layer + 1]) * widths_[layer],
          widths_[layer + 1]};
}

namespace {

void activate(Activation act, Vec& v) {
  if (act == Activation::Tanh) {
    v = v.array().tanh().matrix();
  } else {
    v = v.cwiseMax(0.0);
  }
}

// Derivative expressed through the post-activation value.
void scale_by_activation_grad(Activation act, const Vec& post, Vec& delta) {
  if (act == Activation::Tanh) {
    delta.array() *= 1.0 - post.array().square();
  } else {
    delta.array() *= (post.array() > 0.0).cast<double>();
  }
}

}  // namespace

Vec Fnn::eval(const Eigen::Ref<const Vec>& input) const {
  require(input.size() == input_dim(), "Fnn::eval: input dimension mismatch");
  Vec h = input;
  for (int k = 0; k < num_layers(); ++k) {
    Vec next = weight(k) * h + bias(k);
    if (k + 1 < num_layers()) activate(act_, next);
    h = std::move(next);
  }
  return h;
}

Vec Fnn::forward(const Eigen::Ref<const Vec>& input, Tape& tape) const {
  require(input.size() == input_dim(), "Fnn::forward: input dimension mismatch");
  tape.layer_out.resize(widths_.size());
  tape.layer_out[0] = input;
  for (int k = 0; k < num_layers(); ++k) {
    Vec next = weight(k) * tape.layer_out[k] + bias(k);
    if (k + 1 < num_layers()) activate(act_, next);
    tape.layer_out[k + 1] = std::move(next);
  }
  return tape.layer_out.back();
}

Vec Fnn::backward(const Tape& tape, const Eigen::Ref<const Vec>& d_out,
                  Eigen::Ref<Vec> grad_params) const {
  require(d_out.size() == output_dim(), "Fnn::backward: output adjoint mismatch");
  require(grad_params.size() == num_params(), "Fnn::backward: gradient size mismatch");
  Vec delta = d_out;
  for (int k = num_layers() - 1; k >= 0; --k) {
    const Vec& in = tape.layer_out[k];
    const Eigen::Index w_size = static_cast<Eigen::Index>(widths_[k + 1]) * widths_[k];
    Eigen::Map<Mat>(grad_params.data() + offsets_[k], widths_[k + 1], widths_[k])
        .noalias() += delta * in.transpose();
    grad_params.segment(offsets_[k] + w_size, widths_[k + 1]) += delta;
    Vec prev = weight(k).transpose() * delta;
    if (k > 0) scale_by_activation_grad(act_, in, prev);
    delta = std::move(prev);
  }
  return delta;
}

Mat Fnn::input_jacobian(const Eigen::Ref<const Vec>& input) const {
  Tape tape;
  forward(input, tape);
  // Forward-mode: propagate the identity through the layers.
  Mat jac = Mat::Identity(input_dim(), input_dim());
  for (int k = 0; k < num_layers(); ++k) {
    Mat next = weight(k) * jac;
    if (k + 1 < num_layers()) {
      const Vec& post = tape.layer_out[k + 1];
      Vec d = act_ == Activation::Tanh
                  ? Vec(1.0 - post.array().square())
                  : Vec((post.array() > 0.0).cast<double>());
      next = d.asDiagonal() * next;
    }
    jac = std::move(next);
  }
  return jac;
}

FnnGrads fnn_grads(const Fnn& net, const Eigen::Ref<const Vec>& input) {
  FnnGrads out;
  Fnn::Tape tape;
  net.forward(input, tape);
  out.input_jacobian.resize(net.output_dim(), net.input_dim());
  out.param_jacobian = Mat::Zero(net.output_dim(), net.num_params());
  Vec grad(net.num_params());
  for (int r = 0; r < net.output_dim(); ++r) {
    grad.setZero();
    Vec d_out = Vec::Unit(net.output_dim(), r);
    out.input_jacobian.row(r) = net.backward(tape, d_out, grad).transpose();
    out.param_jacobian.row(r) = grad.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// MaNet / LseNet

namespace {

void unpack_terms(const std::vector<AffineTerm>& terms, Mat& slopes, Vec& offsets) {
  require(!terms.empty(), "affine network needs at least one term");
  const auto dim = terms.front().a.size();
  slopes.resize(static_cast<Eigen::Index>(terms.size()), dim);
  offsets.resize(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].a.size() == dim, "affine terms must share a dimension");
    require(terms[i].a.allFinite() && std::isfinite(terms[i].b),
            "affine term coefficients must be finite");
    slopes.row(static_cast<Eigen::Index>(i)) = terms[i].a.transpose();
    offsets[static_cast<Eigen::Index>(i)] = terms[i].b;
  }
}

}  // namespace

MaNet::MaNet(const std::vector<AffineTerm>& terms) { unpack_terms(terms, slopes_, offsets_); }

MaNet::MaNet(Mat slopes, Vec offsets) : slopes_(std::move(slopes)), offsets_(std::move(offsets)) {
  require(offsets_.size() >= 1, "MaNet: need at least one term");
  require(slopes_.rows() == offsets_.size(), "MaNet: slopes/offsets mismatch");
}

double MaNet::eval(const Eigen::Ref<const Vec>& z) const {
  require(z.size() == dim(), "MaNet::eval: dimension mismatch");
  return (slopes_ * z + offsets_).maxCoeff();
}

LseNet::LseNet(const std::vector<AffineTerm>& terms, double temperature)
    : temperature_(temperature) {
  require(temperature > 0.0, "LseNet: temperature must be positive");
  unpack_terms(terms, slopes_, offsets_);
}

LseNet::LseNet(Mat slopes, Vec offsets, double temperature)
    : slopes_(std::move(slopes)), offsets_(std::move(offsets)), temperature_(temperature) {
  require(temperature > 0.0, "LseNet: temperature must be positive");
  require(offsets_.size() >= 1, "LseNet: need at least one term");
  require(slopes_.rows() == offsets_.size(), "LseNet: slopes/offsets mismatch");
}

double LseNet::value(const Eigen::Ref<const Vec>& z) const {
  require(z.size() == dim(), "LseNet: dimension mismatch");
  return logsumexp(slopes_ * z + offsets_, temperature_);
}

ValueGrad LseNet::eval(const Eigen::Ref<const Vec>& z, Vec* weights) const {
  require(z.size() == dim(), "LseNet: dimension mismatch");
  Vec p;
  ValueGrad out;
  out.value = logsumexp_with_weights(slopes_ * z + offsets_, temperature_, p);
  out.grad = slopes_.transpose() * p;
  if (weights != nullptr) *weights = std::move(p);
  return out;
}

Mat LseNet::hessian(const Eigen::Ref<const Vec>& z) const {
  Vec p;
  logsumexp_with_weights(slopes_ * z + offsets_, temperature_, p);
  const Vec g = slopes_.transpose() * p;
  Mat h = slopes_.transpose() * p.asDiagonal() * slopes_;
  h.noalias() -= g * g.transpose();
  h /= temperature_;
  // Symmetrize away rounding so downstream Cholesky sees an exact symmetric matrix.
  return 0.5 * (h + h.transpose());
}

Vec LseNet::get_params() const {
  Vec p(num_params());
  p.head(slopes_.size()) = Eigen::Map<const Vec>(slopes_.data(), slopes_.size());
  p.tail(offsets_.size()) = offsets_;
  return p;
}

void LseNet::set_params(const Eigen::Ref<const Vec>& p) {
  require(p.size() == num_params(), "LseNet::set_params: size mismatch");
  Eigen::Map<Vec>(slopes_.data(), slopes_.size()) = p.head(slopes_.size());
  offsets_ = p.tail(offsets_.size());
}

Vec LseNet::param_grad(const Eigen::Ref<const Vec>& z, const Vec& weights) const {
  Vec g(num_params());
  Mat d_slopes = weights * z.transpose();
  g.head(slopes_.size()) = Eigen::Map<const Vec>(d_slopes.data(), d_slopes.size());
  g.tail(offsets_.size()) = weights;
  return g;
}

// ---------------------------------------------------------------------------
// PlseNet

PlseNet::PlseNet(int x_dim, int u_dim, int terms, double temperature,
                 const std::vector<int>& subnet_hidden, Activation act, bool plus)
    : x_dim_(x_dim), u_dim_(u_dim), terms_(terms), temperature_(temperature),
      hidden_(subnet_hidden), act_(act), plus_(plus) {
  require(x_dim >= 1 && u_dim >= 1, "PlseNet: dimensions must be positive");
  require(terms >= 1, "PlseNet: need at least one term");
  require(temperature > 0.0, "PlseNet: temperature must be positive");
  auto widths = [&](int out) {
    std::vector<int> w{x_dim};
    w.insert(w.end(), subnet_hidden.begin(), subnet_hidden.end());
    w.push_back(out);
    return w;
  };
  for (int i = first_slope_term(); i < terms; ++i) slope_nets_.emplace_back(widths(u_dim), act);
  for (int i = 0; i < terms; ++i) offset_nets_.emplace_back(widths(1), act);
  index_params();
}

void PlseNet::index_params() {
  slope_offsets_.clear();
  offset_offsets_.clear();
  Eigen::Index n = 0;
  for (const auto& net : slope_nets_) {
    slope_offsets_.push_back(n);
    n += net.num_params();
  }
  for (const auto& net : offset_nets_) {
    offset_offsets_.push_back(n);
    n += net.num_params();
  }
  num_params_ = n;
}

LseNet PlseNet::slice(const Eigen::Ref<const Vec>& x) const {
  require(x.size() == x_dim_, "PlseNet: x dimension mismatch");
  Mat slopes = Mat::Zero(terms_, u_dim_);
  Vec offsets(terms_);
  const int first = first_slope_term();
  for (int i = first; i < terms_; ++i) {
    slopes.row(i) = slope_nets_[i - first].eval(x).transpose();
  }
  for (int i = 0; i < terms_; ++i) offsets[i] = offset_nets_[i].eval(x)[0];
  return LseNet(std::move(slopes), std::move(offsets), temperature_);
}

PlseNet::Slice PlseNet::slice_with_tape(const Eigen::Ref<const Vec>& x) const {
  require(x.size() == x_dim_, "PlseNet: x dimension mismatch");
  Slice s;
  Mat slopes = Mat::Zero(terms_, u_dim_);
  Vec offsets(terms_);
  const int first = first_slope_term();
  s.slope_tapes.resize(slope_nets_.size());
  s.offset_tapes.resize(offset_nets_.size());
  for (int i = first; i < terms_; ++i) {
    slopes.row(i) = slope_nets_[i - first].forward(x, s.slope_tapes[i - first]).transpose();
  }
  for (int i = 0; i < terms_; ++i) offsets[i] = offset_nets_[i].forward(x, s.offset_tapes[i])[0];
  s.lse = LseNet(std::move(slopes), std::move(offsets), temperature_);
  return s;
}

Vec PlseNet::backprop(const Slice& slice, const Mat& d_slopes, const Vec& d_offsets,
                      Eigen::Ref<Vec> grad) const {
  require(grad.size() == num_params_, "PlseNet::backprop: gradient size mismatch");
  const int first = first_slope_term();
  Vec d_x = Vec::Zero(x_dim_);
  Vec d_out(1);
  for (int i = first; i < terms_; ++i) {
    const auto j = static_cast<std::size_t>(i - first);
    const Fnn& net = slope_nets_[j];
    d_x += net.backward(slice.slope_tapes[j], d_slopes.row(i).transpose(),
                        grad.segment(slope_offsets_[j], net.num_params()));
  }
  for (int i = 0; i < terms_; ++i) {
    const auto j = static_cast<std::size_t>(i);
    d_out[0] = d_offsets[i];
    d_x += offset_nets_[j].backward(slice.offset_tapes[j], d_out,
                                    grad.segment(offset_offsets_[j], offset_nets_[j].num_params()));
  }
  return d_x;
}

PlseNet::Eval PlseNet::eval(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u,
                            bool with_theta) const {
  require(u.size() == u_dim_, "PlseNet: u dimension mismatch");
  Eval out;
  if (!with_theta) {
    auto vg = slice(x).eval(u);
    out.value = vg.value;
    out.grad_u = std::move(vg.grad);
    return out;
  }
  Slice s = slice_with_tape(x);
  Vec p;
  auto vg = s.lse.eval(u, &p);
  out.value = vg.value;
  out.grad_u = std::move(vg.grad);
  out.grad_theta = Vec::Zero(num_params_);
  // d value / d a_i = p_i u, d value / d b_i = p_i
  out.grad_x = backprop(s, p * u.transpose(), p, out.grad_theta);
  return out;
}

Vec PlseNet::get_params() const {
  Vec p(num_params_);
  for (std::size_t j = 0; j < slope_nets_.size(); ++j)
    p.segment(slope_offsets_[j], slope_nets_[j].num_params()) = slope_nets_[j].params();
  for (std::size_t j = 0; j < offset_nets_.size(); ++j)
    p.segment(offset_offsets_[j], offset_nets_[j].num_params()) = offset_nets_[j].params();
  return p;
}

void PlseNet::set_params(const Eigen::Ref<const Vec>& p) {
  require(p.size() == num_params_, "PlseNet::set_params: size mismatch");
  for (std::size_t j = 0; j < slope_nets_.size(); ++j)
    slope_nets_[j].params() = p.segment(slope_offsets_[j], slope_nets_[j].num_params());
  for (std::size_t j = 0; j < offset_nets_.size(); ++j)
    offset_nets_[j].params() = p.segment(offset_offsets_[j], offset_nets_[j].num_params());
}

// ---------------------------------------------------------------------------
// DlseNet / EplseNet

DlseNet::DlseNet(LseNet pos, LseNet neg) : pos_(std::move(pos)), neg_(std::move(neg)) {
  require(pos_.temperature() == neg_.temperature(),
          "DlseNet: both LSE networks must share a temperature");
  require(pos_.dim() == neg_.dim(), "DlseNet: dimension mismatch");
}

ValueGrad DlseNet::eval(const Eigen::Ref<const Vec>& z) const {
  auto a = pos_.eval(z);
  auto b = neg_.eval(z);
  return {a.value - b.value, a.grad - b.grad};
}

std::pair<LseNet, LseNet> DlseNet::slice(const Eigen::Ref<const Vec>& x) const {
  const auto n = x.size();
  require(n < dim(), "DlseNet::slice: x must leave at least one free coordinate");
  auto cut = [&](const LseNet& net) {
    Vec offsets = net.offsets() + net.slopes().leftCols(n) * x;
    return LseNet(net.slopes().rightCols(dim() - n), std::move(offsets), net.temperature());
  };
  return {cut(pos_), cut(neg_)};
}

Vec DlseNet::get_params() const {
  Vec p(num_params());
  p << pos_.get_params(), neg_.get_params();
  return p;
}

void DlseNet::set_params(const Eigen::Ref<const Vec>& p) {
  require(p.size() == num_params(), "DlseNet::set_params: size mismatch");
  pos_.set_params(p.head(pos_.num_params()));
  neg_.set_params(p.tail(neg_.num_params()));
}

Vec EplseNet::get_params() const {
  Vec p(num_params());
  p << pcm.get_params(), gap.params();
  return p;
}

void EplseNet::set_params(const Eigen::Ref<const Vec>& p) {
  require(p.size() == num_params(), "EplseNet::set_params: size mismatch");
  pcm.set_params(p.head(pcm.num_params()));
  gap.params() = p.tail(gap.num_params());
}

// ---------------------------------------------------------------------------
// Construction helpers

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Fnn: return "fnn";
    case ModelKind::Ma: return "ma";
    case ModelKind::Lse: return "lse";
    case ModelKind::Plse: return "plse";
    case ModelKind::PlsePlus: return "plse+";
    case ModelKind::Dlse: return "dlse";
    case ModelKind::Eplse: return "eplse";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::Fnn, ModelKind::Ma, ModelKind::Lse, ModelKind::Plse,
                 ModelKind::PlsePlus, ModelKind::Dlse, ModelKind::Eplse}) {
    if (to_string(k) == name) return k;
  }
  if (name == "plseplus" || name == "plse_plus") return ModelKind::PlsePlus;
  throw ContractViolation("unknown model kind: " + name);
}

ModelKind kind_of(const Approximator& model) {
  switch (model.index()) {
    case 0: return ModelKind::Fnn;
    case 1: return ModelKind::Ma;
    case 2: return ModelKind::Lse;
    case 3: return std::get<PlseNet>(model).plus_constrained() ? ModelKind::PlsePlus
                                                               : ModelKind::Plse;
    case 4: return ModelKind::Dlse;
    default: return ModelKind::Eplse;
  }
}

namespace {

void init_fnn(Fnn& net, Rng& rng) {
  for (int k = 0; k < net.num_layers(); ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(net.widths()[k]));
    auto w = net.weight(k);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-s, s);
    auto b = net.bias(k);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-s, s);
  }
}

LseNet init_lse(int dim, int terms, double temperature, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  Mat slopes(terms, dim);
  Vec offsets(terms);
  for (Eigen::Index j = 0; j < slopes.cols(); ++j)
    for (Eigen::Index i = 0; i < slopes.rows(); ++i) slopes(i, j) = rng.uniform(-s, s);
  for (Eigen::Index i = 0; i < offsets.size(); ++i) offsets[i] = rng.uniform(-s, s);
  return LseNet(std::move(slopes), std::move(offsets), temperature);
}

std::vector<int> fnn_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

PlseNet init_plse(const NetworkConfig& c, bool plus, Rng& rng) {
  PlseNet net(c.x_dim, c.u_dim, c.terms, c.temperature, c.subnet_hidden, Activation::Tanh, plus);
  for (auto& sub : net.slope_nets()) init_fnn(sub, rng);
  for (auto& sub : net.offset_nets()) init_fnn(sub, rng);
  return net;
}

}  // namespace

Approximator init_network(ModelKind kind, const NetworkConfig& c, std::uint64_t seed) {
  require(c.terms >= 1, "init_network: terms must be >= 1");
  require(c.temperature > 0.0, "init_network: temperature must be positive");
  require(c.x_dim >= 0 && c.u_dim >= 1, "init_network: invalid dimensions");
  require(!c.hidden.empty() && !c.subnet_hidden.empty(),
          "init_network: hidden layer lists must be non-empty");
  Rng rng = Rng(seed).split("init");
  const int z_dim = c.x_dim + c.u_dim;
  switch (kind) {
    case ModelKind::Fnn: {
      Fnn net(fnn_widths(z_dim, c.hidden, 1), c.activation);
      init_fnn(net, rng);
      return net;
    }
    case ModelKind::Ma: {
      auto lse = init_lse(z_dim, c.terms, c.temperature, rng);
      return lse.as_max_affine();
    }
    case ModelKind::Lse:
      return init_lse(z_dim, c.terms, c.temperature, rng);
    case ModelKind::Plse:
    case ModelKind::PlsePlus:
      require(c.x_dim >= 1, "init_network: PLSE needs x_dim >= 1");
      return init_plse(c, kind == ModelKind::PlsePlus, rng);
    case ModelKind::Dlse: {
      auto pos = init_lse(z_dim, c.terms, c.temperature, rng);
      auto neg = init_lse(z_dim, c.terms, c.temperature, rng);
      return DlseNet(std::move(pos), std::move(neg));
    }
    case ModelKind::Eplse: {
      require(c.x_dim >= 1, "init_network: EPLSE needs x_dim >= 1");
      EplseNet net;
      net.pcm = init_plse(c, true, rng);
      net.gap = Fnn(fnn_widths(z_dim, c.hidden, 1), c.activation);
      init_fnn(net.gap, rng);
      return net;
    }
  }
  throw ContractViolation("init_network: unhandled kind");
}

Eigen::Index num_params(const Approximator& model) {
  return std::visit(
      [](const auto& m) -> Eigen::Index {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MaNet>) {
          return m.slopes().size() + m.offsets().size();
        } else {
          return m.num_params();
        }
      },
      model);
}

Vec get_params(const Approximator& model) {
  return std::visit(
      [](const auto& m) -> Vec {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Fnn>) {
          return m.params();
        } else if constexpr (std::is_same_v<T, MaNet>) {
          Vec p(m.slopes().size() + m.offsets().size());
          p << Eigen::Map<const Vec>(m.slopes().data(), m.slopes().size()), m.offsets();
          return p;
        } else {
          return m.get_params();
        }
      },
      model);
}

void set_params(Approximator& model, const Eigen::Ref<const Vec>& p) {
  std::visit(
      [&p](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Fnn>) {
          require(p.size() == m.num_params(), "set_params: size mismatch");
          m.params() = p;
        } else if constexpr (std::is_same_v<T, MaNet>) {
          Mat slopes = m.slopes();
          require(p.size() == slopes.size() + m.offsets().size(), "set_params: size mismatch");
          Eigen::Map<Vec>(slopes.data(), slopes.size()) = p.head(slopes.size());
          m = MaNet(std::move(slopes), p.tail(m.offsets().size()));
        } else {
          m.set_params(p);
        }
      },
      model);
}

Vec join(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& u) {
  Vec z(x.size() + u.size());
  z << x, u;
  return z;
}

}  // namespace pcm
