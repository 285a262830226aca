#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "pcm/approximators.hpp"

namespace pcm {

/// A model together with the settings needed to rebuild its shape.
struct Checkpoint {
  ModelKind kind = ModelKind::Fnn;
  NetworkConfig config;
  std::uint64_t seed = 0;
  Approximator model;
};

/// Text format, one field per line:
///
///   pcm-checkpoint 1
///   kind <fnn|ma|lse|plse|plse+|dlse|eplse>
///   x_dim <int>
///   u_dim <int>
///   terms <int>
///   temperature <hexfloat>
///   hidden <int>...
///   subnet_hidden <int>...
///   activation <tanh|relu>
///   seed <uint64>
///   params <count>
///   <hexfloat>            (count lines, flat parameter order)
///
/// Hexfloats make the round trip bitwise exact.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pcm
