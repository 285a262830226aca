#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pcm/numerics.hpp"

namespace pcm {

struct Sample {
  Vec x;
  Vec u;
  double f = 0.0;
};

struct SplitFractions {
  double train = 0.7;
  double valid = 0.2;
  double test = 0.1;
};

enum class SplitTag { Train, Valid, Test };
std::string to_string(SplitTag tag);

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;

  std::size_t size() const { return samples.size(); }
  /// Tag of every sample, in sample order.
  std::vector<SplitTag> tags() const;
  /// Throws ContractViolation unless the three index lists partition [0, size).
  void validate() const;
};

/// Shuffles [0, n) with `rng` and cuts it into round(n * train),
/// round(n * valid) and the remainder.
void assign_split(Dataset& data, const SplitFractions& fractions, Rng rng);

/// x_i ~ U(x_box), u_i ~ U(u_box), f_i = objective(x_i, u_i).
Dataset sample_uniform_dataset(std::size_t n, const Vec& x_lower, const Vec& x_upper,
                               const Vec& u_lower, const Vec& u_upper,
                               const std::function<double(const Vec&, const Vec&)>& objective,
                               const SplitFractions& fractions, std::uint64_t seed);

/// CSV with the given x/u column names, then `f_name`, then split_tag.
/// `scale_x`/`scale_u` multiply the stored values on output (unit conversion).
void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& x_names,
                       const std::vector<std::string>& u_names, const std::string& f_name,
                       const Vec& scale_x = Vec(), const Vec& scale_u = Vec());

}  // namespace pcm
