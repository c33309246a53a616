#pragma once

// Flat `key = value` run configuration. Lines starting with '#' are comments;
// lists are comma separated. Every key must be known.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqmark/inference.hpp"
#include "seqmark/marker_net.hpp"
#include "seqmark/training.hpp"

namespace seqmark {

struct RunConfig {
  NetConfig net;
  TrainConfig train;
  InferenceConfig inference;
  std::vector<double> tolerances{1.0, 2.0, 5.0, 10.0};

  /// Assigns one key; throws config_error on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  void validate() const;
};

/// Every key in schema order.
const std::vector<std::string>& run_config_keys();
/// Keys that describe the network; a checkpoint records these.
const std::vector<std::string>& net_config_keys();

/// `key = value` lines applied on top of `base`.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
/// Applies `key=value` overrides in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments);
/// Every key, one `key = value` per line; parse_run_config reads it back unchanged.
std::string format_run_config(const RunConfig& config);

}  // namespace seqmark
