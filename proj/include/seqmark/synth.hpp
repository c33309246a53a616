#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "seqmark/data_io.hpp"

namespace seqmark {

enum class MarkerKind { strong, subtle };

struct MarkerSpec {
  std::string name;
  MarkerKind kind = MarkerKind::strong;
};

/// "UB000:strong,TF180:subtle" -> specs, stratigraphic order preserved.
std::vector<MarkerSpec> parse_marker_specs(std::string_view text);
std::string format_marker_specs(const std::vector<MarkerSpec>& specs);

/// Layered synthetic field standing in for a basin of labeled wells.
struct SynthConfig {
  std::size_t n_wells = 80;
  std::size_t min_length = 1500;  // samples
  std::size_t max_length = 2500;
  std::vector<std::string> channels{"GR"};
  std::vector<MarkerSpec> markers{{"UB000", MarkerKind::strong}, {"MB000", MarkerKind::strong},
                                  {"TF180", MarkerKind::subtle}};
  std::size_t layers = 8;
  double trend_amplitude = 150.0;  // ft of structural relief across the field
  double noise_std = 4.0;          // white noise on GR, API units
  double depth_step = 0.5;         // ft
  std::uint64_t seed = 42;

  void validate() const;
};

/// Deterministic in `config.seed` on every platform (fixed engine, arithmetic-only variates).
///
/// Each well is a stack of layers sharing a field-wide template: per-layer GR
/// level, AR(1) texture and white noise. Strong markers sit on layer boundaries
/// whose GR level jumps by 6-10 noise standard deviations. Subtle markers sit
/// inside a layer, a template fraction of its thickness below the boundary
/// above, and only raise the texture variance (x1.5) below them. Column depth and
/// thickness follow smooth functions of each well's position along the field,
/// plus per-well jitter. RES and DEN are linear transforms of the layer levels
/// with their own noise.
Dataset synthesize_wells(const SynthConfig& config);

}  // namespace seqmark
