#include "pcm/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace pcm {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Case1: return "case1";
    case Experiment::Case2: return "case2";
    case Experiment::Gradcheck: return "gradcheck";
    case Experiment::Props: return "props";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (auto e : {Experiment::Case1, Experiment::Case2, Experiment::Gradcheck, Experiment::Props})
    if (to_string(e) == name) return e;
  throw ContractViolation("unknown experiment: " + name);
}

namespace {

using wingrock::kDegToRad;
using wingrock::kRadToDeg;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw std::runtime_error("config: not a finite number: '" + s + "'");
  return v;
}

long to_long(const std::string& s) {
  const std::string t = trim(s);
  long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw std::runtime_error("config: not an integer: '" + s + "'");
  return v;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

std::vector<int> to_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(to_long(item)));
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

Mat to_mat2(const std::string& s) {
  const auto v = to_doubles(s);
  if (v.size() != 4) throw std::runtime_error("config: 2x2 matrix needs 4 row-major entries");
  Mat m(2, 2);
  m << v[0], v[1], v[2], v[3];
  return m;
}

std::string from_mat2(const Mat& m) {
  return join_doubles({m(0, 0), m(0, 1), m(1, 0), m(1, 1)});
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

bool to_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw std::runtime_error("config: not a boolean: '" + s + "'");
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

// Interval of one coordinate of a box, in display units.
std::pair<std::function<std::string()>, std::function<void(const std::string&)>> interval(
    Box& box, int coord, double unit) {
  auto get = [&box, coord, unit] {
    return join_doubles({box.lower()[coord] / unit, box.upper()[coord] / unit});
  };
  auto set = [&box, coord, unit](const std::string& s) {
    const auto v = to_doubles(s);
    if (v.size() != 2 || v[0] > v[1])
      throw std::runtime_error("config: interval needs 'lo, hi' with lo <= hi");
    Vec lo = box.lower(), hi = box.upper();
    lo[coord] = v[0] * unit;
    hi[coord] = v[1] * unit;
    box = Box(lo, hi);
  };
  return {get, set};
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  auto add = [&f](std::string sec, std::string key, std::function<std::string()> get,
                  std::function<void(const std::string&)> set) {
    f.push_back({std::move(sec), std::move(key), std::move(get), std::move(set)});
  };
  auto add_double = [&add](std::string sec, std::string key, double& v) {
    add(std::move(sec), std::move(key), [&v] { return fmt(v); },
        [&v](const std::string& s) { v = to_double(s); });
  };
  auto add_int = [&add](std::string sec, std::string key, int& v) {
    add(std::move(sec), std::move(key), [&v] { return std::to_string(v); },
        [&v](const std::string& s) { v = static_cast<int>(to_long(s)); });
  };
  auto add_long = [&add](std::string sec, std::string key, long& v) {
    add(std::move(sec), std::move(key), [&v] { return std::to_string(v); },
        [&v](const std::string& s) { v = to_long(s); });
  };
  auto add_deg = [&add](std::string sec, std::string key, double& v) {
    add(std::move(sec), std::move(key), [&v] { return fmt(v * kRadToDeg); },
        [&v](const std::string& s) { v = to_double(s) * kDegToRad; });
  };

  add("run", "seed", [&c] { return std::to_string(c.seed); },
      [&c](const std::string& s) { c.seed = static_cast<std::uint64_t>(to_long(s)); });
  add("run", "models",
      [&c] {
        std::string out;
        for (auto k : c.models) out += (out.empty() ? "" : ",") + to_string(k);
        if (c.linear_mpc && c.experiment == Experiment::Case2)
          out += (out.empty() ? "" : ",") + std::string("linear-mpc");
        return out;
      },
      [&c](const std::string& s) { parse_model_list(s, c); });

  add("data", "samples", [&c] { return std::to_string(c.samples); },
      [&c](const std::string& s) { c.samples = static_cast<std::size_t>(to_long(s)); });
  add_double("data", "split_train", c.split.train);
  add_double("data", "split_valid", c.split.valid);
  add_double("data", "split_test", c.split.test);

  add_double("train", "lr", c.train.lr);
  add_double("train", "lr_dlse", c.lr_dlse);
  add_int("train", "epochs", c.train.epochs);
  add_int("train", "batch_size", c.train.batch_size);
  add_int("train", "restarts", c.restarts);
  add_int("train", "eplse_pretrain_epochs", c.eplse_pretrain_epochs);
  add("train", "sensitivity", [&c] { return to_string(c.train.sensitivity); },
      [&c](const std::string& s) { c.train.sensitivity = sensitivity_mode_from_string(trim(s)); });

  add_int("network", "terms", c.network.terms);
  add_double("network", "temperature", c.network.temperature);
  add("network", "hidden", [&c] { return join_ints(c.network.hidden); },
      [&c](const std::string& s) { c.network.hidden = to_ints(s); });
  add("network", "subnet_hidden", [&c] { return join_ints(c.network.subnet_hidden); },
      [&c](const std::string& s) { c.network.subnet_hidden = to_ints(s); });
  add("network", "activation", [&c] { return to_string(c.network.activation); },
      [&c](const std::string& s) { c.network.activation = activation_from_string(trim(s)); });

  add_double("solver", "grad_tol", c.solver.grad_tol);
  add_int("solver", "max_iters", c.solver.max_iters);
  add_int("solver", "multistart", c.solver.multistart_count);
  add("solver", "newton", [&c] { return from_bool(c.solver.use_newton); },
      [&c](const std::string& s) { c.solver.use_newton = to_bool(s); });

  add_long("eval", "oracle_points", c.oracle_points);
  add_long("eval", "surface_x_points", c.surface_x_points);
  add_long("eval", "surface_u_points", c.surface_u_points);

  add_double("wingrock", "omega", c.wingrock.omega);
  add_double("wingrock", "mu1", c.wingrock.mu1);
  add_double("wingrock", "mu2", c.wingrock.mu2);
  add_double("wingrock", "b1", c.wingrock.b1);
  add_double("wingrock", "b2", c.wingrock.b2);

  add_int("nmpc", "horizon", c.nmpc.horizon);
  add_double("nmpc", "dt", c.nmpc.dt);
  add_int("nmpc", "rk4_substeps", c.nmpc.rk4_substeps);
  add("nmpc", "q", [&c] { return from_mat2(c.nmpc.q); },
      [&c](const std::string& s) { c.nmpc.q = to_mat2(s); });
  add("nmpc", "q_terminal", [&c] { return from_mat2(c.nmpc.q_terminal); },
      [&c](const std::string& s) { c.nmpc.q_terminal = to_mat2(s); });
  add("nmpc", "r", [&c] { return fmt(c.nmpc.r(0, 0)); },
      [&c](const std::string& s) { c.nmpc.r(0, 0) = to_double(s); });
  {
    auto [g, s] = interval(c.nmpc.input_box, 0, 1.0);
    add("nmpc", "input", g, s);
  }
  {
    auto [g, s] = interval(c.nmpc.state_box_x0, 0, kDegToRad);
    add("nmpc", "x0_phi_deg", g, s);
  }
  {
    auto [g, s] = interval(c.nmpc.state_box_x0, 1, kDegToRad);
    add("nmpc", "x0_phidot_degps", g, s);
  }
  {
    auto [g, s] = interval(c.nmpc.setpoint_box, 0, kDegToRad);
    add("nmpc", "xd_phi_deg", g, s);
  }
  {
    auto [g, s] = interval(c.nmpc.setpoint_box, 1, kDegToRad);
    add("nmpc", "xd_phidot_degps", g, s);
  }

  add_deg("closed_loop", "x0_phi_deg", c.x0[0]);
  add_deg("closed_loop", "x0_phidot_degps", c.x0[1]);
  add_deg("closed_loop", "xd_phi_deg", c.xd[0]);
  add_deg("closed_loop", "xd_phidot_degps", c.xd[1]);
  add_double("closed_loop", "tf", c.tf);

  add_int("gradcheck", "configs", c.grad_configs);
  add_int("gradcheck", "vjp_instances", c.vjp_instances);
  add_int("gradcheck", "loss_grad_instances", c.loss_grad_instances);
  add_double("gradcheck", "h", c.grad_h);
  add_double("gradcheck", "tol", c.grad_tol);
  add_double("gradcheck", "vjp_h", c.vjp_h);
  add_double("gradcheck", "vjp_tol", c.vjp_tol);

  add_int("props", "theorem1_models", c.theorem1_models);
  add_int("props", "theorem1_xs", c.theorem1_xs);
  add_long("props", "theorem1_grid", c.theorem1_grid);
  add_int("props", "lse_nets", c.lse_nets);
  add_int("props", "lse_points", c.lse_points);
  add_long("props", "gcm_grid", c.gcm_grid);
  add_int("props", "gcm_minorants", c.gcm_minorants);
  add_long("props", "bound_x_points", c.bound_x_points);
  add_long("props", "bound_u_points", c.bound_u_points);
  add_int("props", "bound_train_epochs", c.bound_train_epochs);
  return f;
}

}  // namespace

void parse_model_list(const std::string& list, RunConfig& config) {
  std::vector<ModelKind> kinds;
  bool linear = false;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item == "linear-mpc") {
      linear = true;
      continue;
    }
    const ModelKind k = model_kind_from_string(item);
    if (k != ModelKind::Fnn && k != ModelKind::Plse && k != ModelKind::Dlse &&
        k != ModelKind::Eplse)
      throw ContractViolation("model list: " + item + " is not a trainable experiment model");
    for (auto existing : kinds)
      if (existing == k) throw ContractViolation("model list: duplicate " + item);
    kinds.push_back(k);
  }
  config.models = std::move(kinds);
  config.linear_mpc = linear;
}

void RunConfig::validate() const {
  require(samples >= 10, "config: at least 10 samples");
  require(split.train > 0.0 && split.valid > 0.0 && split.test > 0.0 &&
              std::abs(split.train + split.valid + split.test - 1.0) <= 1e-12,
          "config: split fractions must be positive and sum to 1");
  require(train.lr > 0.0 && lr_dlse > 0.0, "config: learning rates must be positive");
  require(train.epochs >= 1 && train.batch_size >= 1, "config: epochs and batch_size >= 1");
  require(restarts >= 1, "config: restarts >= 1");
  require(eplse_pretrain_epochs >= 0, "config: eplse_pretrain_epochs >= 0");
  require(network.terms >= 1 && network.temperature > 0.0, "config: terms >= 1, temperature > 0");
  require(!network.hidden.empty() && !network.subnet_hidden.empty(),
          "config: hidden layer lists must be non-empty");
  for (int w : network.hidden) require(w >= 1, "config: hidden widths >= 1");
  for (int w : network.subnet_hidden) require(w >= 1, "config: subnet widths >= 1");
  require(solver.grad_tol > 0.0 && solver.max_iters >= 1 && solver.multistart_count >= 1,
          "config: invalid solver options");
  require(oracle_points >= 2 && surface_x_points >= 2 && surface_u_points >= 2,
          "config: grids need at least 2 points");
  nmpc.validate();
  if (experiment == Experiment::Case1 || experiment == Experiment::Case2)
    require(!models.empty() || (experiment == Experiment::Case2 && linear_mpc),
            "config: at least one model kind");
  require(tf > 0.0, "config: tf must be positive");
}

RunConfig default_run_config(Experiment experiment) {
  RunConfig c;
  c.experiment = experiment;
  if (experiment == Experiment::Case2) {
    c.samples = 10000;
    c.lr_dlse = 1e-3;
    c.network.x_dim = 4;
    c.network.u_dim = 5;
  }
  return c;
}

RunConfig load_run_config(const std::string& path, Experiment experiment) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  RunConfig c = default_run_config(experiment);
  auto table = fields(c);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw std::runtime_error("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      bool found = false;
      for (auto& field : table) {
        if (field.section == section && field.key == key) {
          try {
            field.set(value.data());
          } catch (const std::exception& e) {
            throw std::runtime_error("config: [" + section + "] " + key + ": " + e.what());
          }
          found = true;
          break;
        }
      }
      if (!found) throw std::runtime_error("config: unknown key [" + section + "] " + key);
    }
  }
  if (experiment == Experiment::Case2) {
    // The plant constants are not published with the method, so a Case 2
    // run has to state them.
    for (const char* key : {"omega", "mu1", "mu2", "b1", "b2"}) {
      if (!tree.get_child_optional(std::string("wingrock.") + key))
        throw std::runtime_error(std::string("config: case2 requires [wingrock] ") + key);
    }
  }
  c.train.split = c.split;
  c.train.seed = c.seed;
  c.validate();
  return c;
}

std::string to_ini(const RunConfig& config) {
  RunConfig copy = config;
  auto table = fields(copy);
  std::ostringstream out;
  out << "; experiment " << to_string(config.experiment) << "\n";
  std::string section;
  for (const auto& f : table) {
    if (f.section != section) {
      section = f.section;
      out << "\n[" << section << "]\n";
    }
    out << f.key << " = " << f.get() << '\n';
  }
  return out.str();
}

}  // namespace pcm
