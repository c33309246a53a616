#include "seqmark/synth.hpp"

#include <algorithm>
#include <cmath>

#include "csv.hpp"
#include "seqmark/error.hpp"
#include "seqmark/random.hpp"

namespace seqmark {

std::vector<MarkerSpec> parse_marker_specs(std::string_view text) {
  std::vector<MarkerSpec> specs;
  for (const auto& item : csv::split(text)) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    MarkerSpec spec;
    spec.name = std::string(csv::trim(item.substr(0, colon)));
    const std::string kind = colon == std::string::npos ? "strong" : std::string(csv::trim(item.substr(colon + 1)));
    if (kind == "strong") {
      spec.kind = MarkerKind::strong;
    } else if (kind == "subtle") {
      spec.kind = MarkerKind::subtle;
    } else {
      throw Error(ErrorCode::config_error, "marker kind must be strong or subtle, got '" + kind + "'");
    }
    if (spec.name.empty()) throw Error(ErrorCode::config_error, "empty marker name in '" + std::string(text) + "'");
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw Error(ErrorCode::config_error, "no markers given");
  return specs;
}

std::string format_marker_specs(const std::vector<MarkerSpec>& specs) {
  std::string out;
  for (const auto& s : specs) {
    if (!out.empty()) out += ',';
    out += s.name + (s.kind == MarkerKind::strong ? ":strong" : ":subtle");
  }
  return out;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::config_error, msg); };
  if (n_wells == 0) fail("n_wells must be positive");
  if (min_length < 400 || min_length > max_length) fail("length range must satisfy 400 <= min <= max");
  if (channels.empty()) fail("at least one channel is required");
  for (const auto& c : channels) canonical_channel(c);
  if (layers < 3) fail("at least 3 layers are required");
  if (markers.empty()) fail("at least one marker is required");
  if (markers.size() > layers - 1) {
    fail(std::to_string(markers.size()) + " markers are denser than " + std::to_string(layers) +
         " layers allow (at most " + std::to_string(layers - 1) + ")");
  }
  if (!(noise_std > 0.0) || !(depth_step > 0.0) || trend_amplitude < 0.0) fail("noise, step and trend must be positive");
}

namespace {

// Smooth bounded field function of position u in [0, 1]; |f| <= 1.
struct FieldTrend {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;

  static FieldTrend draw(Rng& rng) {
    FieldTrend f{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
    const double norm = std::fabs(f.c1) + std::fabs(f.c2) + std::fabs(f.c3);
    f.c1 /= norm;
    f.c2 /= norm;
    f.c3 /= norm;
    return f;
  }

  double operator()(double u) const {
    const double v = 2.0 * u - 1.0;
    return c1 * v + c2 * 1.5 * (v * v - 1.0 / 3.0) + c3 * 2.5 * (v * v * v - 0.6 * v);
  }
};

struct LayerTemplate {
  double level = 0.0;     // GR mean
  double phi = 0.0;       // AR(1) coefficient
  double texture = 0.0;   // AR(1) stationary std
  double thickness = 0.0; // samples, interior layers only
  double res_offset = 0.0;
  double den_offset = 0.0;
};

struct MarkerSlot {
  std::size_t boundary = 0;  // between layer `boundary` and `boundary + 1`
  MarkerKind kind = MarkerKind::strong;
  double fraction = 0.0;     // subtle: position inside layer `boundary + 1`
};

struct FieldTemplate {
  std::vector<LayerTemplate> layers;
  std::vector<MarkerSlot> slots;
  FieldTrend depth_trend, thickness_trend;
  double mean_level = 0.0;
};

constexpr double kSubtleVarianceRatio = 1.5;

// Layer levels alternate up/down by 6-10 noise std, redrawn until every
// boundary's (above, below) pair is at least 2 noise std from every other pair.
std::vector<double> draw_levels(std::size_t n, double noise, Rng& rng) {
  for (int attempt = 0;; ++attempt) {
    std::vector<double> levels{uniform(rng, 55.0, 75.0)};
    double sign = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
      double next = levels.back() + sign * uniform(rng, 6.0, 10.0) * noise;
      if (next < 15.0) next = levels.back() + uniform(rng, 6.0, 10.0) * noise;
      levels.push_back(next);
      sign = -sign;
    }
    bool distinct = true;
    for (std::size_t a = 0; a + 1 < n && distinct; ++a) {
      for (std::size_t b = a + 1; b + 1 < n && distinct; ++b) {
        const double d = std::max(std::fabs(levels[a] - levels[b]), std::fabs(levels[a + 1] - levels[b + 1]));
        distinct = d >= 2.0 * noise;
      }
    }
    if (distinct || attempt > 1000) return levels;
  }
}

FieldTemplate draw_template(const SynthConfig& cfg, Rng& rng) {
  FieldTemplate f;
  const std::size_t L = cfg.layers;
  const auto levels = draw_levels(L, cfg.noise_std, rng);
  double column = 0.0;
  for (std::size_t k = 0; k < L; ++k) {
    LayerTemplate layer;
    layer.level = levels[k];
    layer.phi = uniform(rng, 0.5, 0.8);
    layer.texture = uniform(rng, 0.3, 0.5) * cfg.noise_std;
    layer.thickness = (k == 0 || k + 1 == L) ? 0.0 : uniform(rng, 0.7, 1.3);
    layer.res_offset = uniform(rng, -2.0, 2.0);
    layer.den_offset = uniform(rng, -0.02, 0.02);
    column += layer.thickness;
    f.layers.push_back(layer);
  }
  // Interior column spans half the shortest well.
  const double scale = 0.5 * static_cast<double>(cfg.min_length) / column;
  for (auto& layer : f.layers) layer.thickness *= scale;
  for (const auto& layer : f.layers) f.mean_level += layer.level / static_cast<double>(L);

  const std::size_t n = cfg.markers.size();
  for (std::size_t i = 0; i < n; ++i) {
    MarkerSlot slot;
    slot.boundary = static_cast<std::size_t>((static_cast<double>(i) + 0.5) * static_cast<double>(L - 1) /
                                             static_cast<double>(n));
    slot.kind = cfg.markers[i].kind;
    slot.fraction = uniform(rng, 0.35, 0.55);
    f.slots.push_back(slot);
  }
  f.depth_trend = FieldTrend::draw(rng);
  f.thickness_trend = FieldTrend::draw(rng);
  return f;
}

}  // namespace

Dataset synthesize_wells(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<std::string> channels;
  for (const auto& c : cfg.channels) channels.push_back(canonical_channel(c));

  Rng rng(cfg.seed);
  const FieldTemplate field = draw_template(cfg, rng);
  const std::size_t L = cfg.layers;
  double mean_interior = 0.0;
  for (std::size_t k = 1; k + 1 < L; ++k) mean_interior += field.layers[k].thickness / static_cast<double>(L - 2);

  Dataset data;
  for (std::size_t w = 0; w < cfg.n_wells; ++w) {
    const double u = uniform01(rng);
    const auto T = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(cfg.min_length),
                                                        static_cast<std::int64_t>(cfg.max_length)));
    const double thick_scale = 1.0 + 0.08 * field.thickness_trend(u);

    // Boundary positions relative to the column top.
    std::vector<double> boundary(L - 1, 0.0);
    double z = 0.0;
    for (std::size_t k = 1; k < L; ++k) {
      boundary[k - 1] = z;
      if (k + 1 < L) z += field.layers[k].thickness * thick_scale * (1.0 + 0.05 * standard_normal(rng));
    }
    const double column = z;
    const double slack = static_cast<double>(T) - column;
    const double top = std::floor(slack * uniform(rng, 0.3, 0.7));

    std::vector<std::size_t> bidx(L - 1);
    for (std::size_t k = 0; k + 1 < L; ++k) bidx[k] = static_cast<std::size_t>(top + std::floor(boundary[k]));

    // Subtle markers and their texture change point.
    std::vector<std::size_t> marker_index(field.slots.size());
    std::vector<std::pair<std::size_t, std::size_t>> boosted;  // [begin, end) with raised texture variance
    for (std::size_t i = 0; i < field.slots.size(); ++i) {
      const auto& slot = field.slots[i];
      const std::size_t b = bidx[slot.boundary];
      if (slot.kind == MarkerKind::strong) {
        marker_index[i] = b;
        continue;
      }
      const bool interior = slot.boundary + 2 < L;
      const double host = interior ? static_cast<double>(bidx[slot.boundary + 1] - b) : mean_interior * thick_scale;
      const double jitter = 1.5 * standard_normal(rng);
      const auto offset = static_cast<std::size_t>(std::max(5.0, std::floor(slot.fraction * host + jitter + 0.5)));
      marker_index[i] = std::min(b + offset, T - 1);
      const std::size_t end = interior ? bidx[slot.boundary + 1] : T;
      boosted.emplace_back(marker_index[i], end);
    }

    // Layer id per sample.
    std::vector<std::size_t> layer_of(T, 0);
    for (std::size_t t = 0, k = 0; t < T; ++t) {
      while (k + 1 < L && t >= bidx[k]) ++k;
      layer_of[t] = k;
    }

    std::vector<double> texture(T, 0.0);
    double prev = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& layer = field.layers[layer_of[t]];
      double tau = layer.texture;
      for (const auto& [b, e] : boosted) {
        if (t >= b && t < e) tau *= std::sqrt(kSubtleVarianceRatio);
      }
      prev = layer.phi * prev + std::sqrt(1.0 - layer.phi * layer.phi) * tau * standard_normal(rng);
      texture[t] = prev;
    }

    const double shift = 0.5 * cfg.noise_std * standard_normal(rng);
    const std::size_t C = channels.size();
    Tensor samples({C, T});
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto& layer = field.layers[layer_of[t]];
        const double gr = layer.level + shift + texture[t];
        double v = 0.0;
        if (channels[c] == "GR") {
          v = gr + cfg.noise_std * standard_normal(rng);
        } else if (channels[c] == "RES") {
          v = 20.0 - 0.12 * (gr - field.mean_level) + layer.res_offset + 0.8 * standard_normal(rng);
        } else {
          v = 2.45 + 0.003 * (gr - field.mean_level) + layer.den_offset + 0.015 * standard_normal(rng);
        }
        samples.at(c, t) = v;
      }
    }

    // Column top follows the structural trend; depths stay on the sample grid.
    const double column_top_ft =
        std::floor((8000.0 + cfg.trend_amplitude * field.depth_trend(u) + 2.0 * standard_normal(rng)) /
                   cfg.depth_step) * cfg.depth_step;
    WellLog well;
    well.id = "W" + std::string(3 - std::min<std::size_t>(3, std::to_string(w + 1).size()), '0') + std::to_string(w + 1);
    well.depth_step = cfg.depth_step;
    well.depth_start = column_top_ft - top * cfg.depth_step;
    well.channels = channels;
    well.samples = std::move(samples);
    for (std::size_t i = 0; i < field.slots.size(); ++i) {
      data.picks.push_back(MarkerPick{well.id, cfg.markers[i].name, well.depth_at(marker_index[i])});
    }
    data.wells.push_back(std::move(well));
  }
  return data;
}

}  // namespace seqmark
