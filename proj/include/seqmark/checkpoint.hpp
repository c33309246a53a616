#pragma once

// `.smck` checkpoint: a line-oriented text file.
//
//   seqmark-checkpoint <version>
//   marker <name>
//   config <key> = <value>          (one per network key)
//   norm <channel> <mean-hex> <std-hex>
//   param <name> <rank> <extents...> <value-hex...>
//   end
//
// Doubles are written as 16 hex digits of their IEEE-754 bit pattern.

#include <cstdint>
#include <filesystem>
#include <string>

#include "seqmark/data_io.hpp"
#include "seqmark/marker_net.hpp"

namespace seqmark {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  MarkerNet net;
  NormStats norm;
};

std::string encode_bits(double value);
double decode_bits(std::string_view hex);

std::string serialize_checkpoint(const MarkerNet& net, const NormStats& norm);
Checkpoint deserialize_checkpoint(std::string_view text);

void save_checkpoint(const MarkerNet& net, const NormStats& norm, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace seqmark
