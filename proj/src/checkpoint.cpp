#include "pcm/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcm {

namespace {

constexpr const char* kMagic = "pcm-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  std::ostringstream s;
  s << std::hexfloat << v;
  return s.str();
}

double parse_double(const std::string& token) {
  // operator>> does not accept hexfloats in libstdc++.
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size())
    throw std::runtime_error("checkpoint: bad number '" + token + "'");
  return v;
}

std::istringstream field(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing field " + key);
  std::istringstream s(line);
  std::string name;
  s >> name;
  if (name != key)
    throw std::runtime_error("checkpoint: expected field " + key + ", got '" + name + "'");
  return s;
}

void write_ints(std::ostream& out, const std::vector<int>& v) {
  for (int w : v) out << ' ' << w;
}

std::vector<int> read_ints(std::istringstream& s) {
  std::vector<int> v;
  int w = 0;
  while (s >> w) v.push_back(w);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  require(kind_of(ckpt.model) == ckpt.kind, "write_checkpoint: kind does not match model");
  const NetworkConfig& c = ckpt.config;
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind " << to_string(ckpt.kind) << '\n';
  out << "x_dim " << c.x_dim << '\n';
  out << "u_dim " << c.u_dim << '\n';
  out << "terms " << c.terms << '\n';
  out << "temperature " << hex(c.temperature) << '\n';
  out << "hidden";
  write_ints(out, c.hidden);
  out << "\nsubnet_hidden";
  write_ints(out, c.subnet_hidden);
  out << "\nactivation " << to_string(c.activation) << '\n';
  out << "seed " << ckpt.seed << '\n';
  const Vec p = get_params(ckpt.model);
  out << "params " << p.size() << '\n';
  for (Eigen::Index i = 0; i < p.size(); ++i) out << hex(p[i]) << '\n';
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: empty input");
    std::istringstream s(line);
    s >> magic >> version;
  }
  if (magic != kMagic || version != kVersion)
    throw std::runtime_error("checkpoint: unsupported header");

  Checkpoint ckpt;
  std::string token;
  field(in, "kind") >> token;
  ckpt.kind = model_kind_from_string(token);
  NetworkConfig& c = ckpt.config;
  field(in, "x_dim") >> c.x_dim;
  field(in, "u_dim") >> c.u_dim;
  field(in, "terms") >> c.terms;
  field(in, "temperature") >> token;
  c.temperature = parse_double(token);
  auto hs = field(in, "hidden");
  c.hidden = read_ints(hs);
  auto ss = field(in, "subnet_hidden");
  c.subnet_hidden = read_ints(ss);
  field(in, "activation") >> token;
  c.activation = activation_from_string(token);
  field(in, "seed") >> ckpt.seed;
  long count = -1;
  field(in, "params") >> count;

  ckpt.model = init_network(ckpt.kind, c, ckpt.seed);
  if (count != static_cast<long>(num_params(ckpt.model)))
    throw std::runtime_error("checkpoint: parameter count does not match the recorded shape");
  Vec p(count);
  for (long i = 0; i < count; ++i) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated parameter list");
    p[i] = parse_double(token);
  }
  set_params(ckpt.model, p);
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace pcm
