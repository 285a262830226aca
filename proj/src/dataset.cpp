#include "pcm/dataset.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>

namespace pcm {

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Valid: return "valid";
    case SplitTag::Test: return "test";
  }
  return "?";
}

std::vector<SplitTag> Dataset::tags() const {
  std::vector<SplitTag> out(samples.size(), SplitTag::Train);
  for (auto i : valid) out[i] = SplitTag::Valid;
  for (auto i : test) out[i] = SplitTag::Test;
  return out;
}

void Dataset::validate() const {
  std::vector<int> seen(samples.size(), 0);
  for (const auto* part : {&train, &valid, &test}) {
    for (auto i : *part) {
      require(i < samples.size(), "Dataset: split index out of range");
      seen[i] += 1;
    }
  }
  for (int c : seen) require(c == 1, "Dataset: splits must partition the sample set");
}

void assign_split(Dataset& data, const SplitFractions& fr, Rng rng) {
  require(fr.train > 0.0 && fr.valid > 0.0 && fr.test > 0.0,
          "assign_split: fractions must be positive");
  require(std::abs(fr.train + fr.valid + fr.test - 1.0) < 1e-9,
          "assign_split: fractions must sum to 1");
  const std::size_t n = data.samples.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fr.train));
  const auto n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * fr.valid)));
  data.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  data.valid.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                    perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  data.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), perm.end());
}

Dataset sample_uniform_dataset(std::size_t n, const Vec& x_lower, const Vec& x_upper,
                               const Vec& u_lower, const Vec& u_upper,
                               const std::function<double(const Vec&, const Vec&)>& objective,
                               const SplitFractions& fractions, std::uint64_t seed) {
  require(n >= 1, "sample_uniform_dataset: n must be >= 1");
  Rng root(seed);
  Rng draw = root.split("data");
  Dataset data;
  data.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Sample s;
    s.x.resize(x_lower.size());
    s.u.resize(u_lower.size());
    for (Eigen::Index i = 0; i < s.x.size(); ++i) s.x[i] = draw.uniform(x_lower[i], x_upper[i]);
    for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u[i] = draw.uniform(u_lower[i], u_upper[i]);
    s.f = objective(s.x, s.u);
    data.samples.push_back(std::move(s));
  }
  assign_split(data, fractions, root.split("split"));
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& x_names,
                       const std::vector<std::string>& u_names, const std::string& f_name,
                       const Vec& scale_x, const Vec& scale_u) {
  const auto tags = data.tags();
  for (const auto& n : x_names) out << n << ',';
  for (const auto& n : u_names) out << n << ',';
  out << f_name << ",split_tag\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < data.samples.size(); ++k) {
    const auto& s = data.samples[k];
    require(s.x.size() == static_cast<Eigen::Index>(x_names.size()) &&
                s.u.size() == static_cast<Eigen::Index>(u_names.size()),
            "write_dataset_csv: column count mismatch");
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
      out << s.x[i] * (scale_x.size() ? scale_x[i] : 1.0) << ',';
    for (Eigen::Index i = 0; i < s.u.size(); ++i)
      out << s.u[i] * (scale_u.size() ? scale_u[i] : 1.0) << ',';
    out << s.f << ',' << to_string(tags[k]) << '\n';
  }
}

}  // namespace pcm
