#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqmark/tensor.hpp"

namespace seqmark {

/// Uniformly sampled depth-indexed log. `samples` is [channels, T].
struct WellLog {
  std::string id;
  double depth_start = 0.0;  // ft
  double depth_step = 0.5;   // ft
  std::vector<std::string> channels;
  Tensor samples;

  std::size_t length() const { return samples.extent(1); }
  double depth_at(std::size_t index) const { return depth_start + static_cast<double>(index) * depth_step; }
  double depth_end() const { return depth_at(length() - 1); }
};

struct MarkerPick {
  std::string well_id;
  std::string marker;
  double depth_ft = 0.0;
};

struct Dataset {
  std::vector<WellLog> wells;
  std::vector<MarkerPick> picks;

  const MarkerPick* find_pick(std::string_view well_id, std::string_view marker) const;
  /// Distinct marker names in first-seen order.
  std::vector<std::string> markers() const;
};

/// Canonical channel name (GR, RES, DEN) for a case-insensitive token.
std::string canonical_channel(std::string_view name);

struct WellLoadOptions {
  /// Linearly interpolate empty or NaN cells instead of rejecting the file.
  bool interpolate_gaps = false;
};

/// Reads `depth,<channels...>`; the well id is the file stem.
WellLog load_well_csv(const std::filesystem::path& path, const WellLoadOptions& options = {});
void save_well_csv(const WellLog& well, const std::filesystem::path& path);

std::vector<MarkerPick> load_picks_csv(const std::filesystem::path& path);
void save_picks_csv(std::span<const MarkerPick> picks, const std::filesystem::path& path);

/// Nearest sample, halves rounded up.
std::size_t pick_to_index(const MarkerPick& pick, const WellLog& well);

struct NormStats {
  std::vector<std::string> channels;
  std::vector<double> mean;
  std::vector<double> stddev;

  Tensor apply(const Tensor& samples) const;
  WellLog apply(const WellLog& well) const;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-channel population mean/std over every sample of the given wells.
NormStats compute_norm_stats(std::span<const WellLog> wells);

/// Statistics from `train` only, applied to every well in `all`. Not idempotent:
/// applying the stats to already-normalized data shifts it again.
std::pair<std::vector<WellLog>, NormStats> normalize_wells(std::span<const WellLog> train,
                                                           std::span<const WellLog> all);

/// Every `*.csv` except `picks.csv` is a well; picks come from `picks.csv`.
Dataset load_dataset(const std::filesystem::path& dir, const WellLoadOptions& options = {});
void save_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace seqmark
