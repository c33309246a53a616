#include "seqmark/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "seqmark/error.hpp"
#include "seqmark/random.hpp"

namespace seqmark {

Detection detect(std::span<const double> probabilities, double depth_start, double depth_step) {
  if (probabilities.empty()) throw Error(ErrorCode::invalid_argument, "cannot detect on an empty curve");
  std::size_t best = 0;
  for (std::size_t j = 1; j < probabilities.size(); ++j) {
    if (probabilities[j] > probabilities[best]) best = j;
  }
  Detection d;
  d.depth_index = best;
  d.depth_ft = depth_start + static_cast<double>(best) * depth_step;
  d.probability = probabilities[best];
  return d;
}

double population_stddev(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += (values[i] - mean) / static_cast<double>(i + 1);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

Detection mc_dropout_detect(const MarkerNet& net, const Tensor& input, const WellLog& well, std::size_t n_passes,
                            std::uint64_t master_seed) {
  if (n_passes < 1) throw Error(ErrorCode::invalid_argument, "MC dropout needs at least one pass");
  Detection d = detect(net.predict(input, nn::Mode::eval), well.depth_start, well.depth_step);
  d.well_id = well.id;
  d.marker = net.marker();
  std::vector<double> depths;
  depths.reserve(n_passes);
  for (std::size_t i = 0; i < n_passes; ++i) {
    Rng rng = derive_stream(master_seed, i);
    depths.push_back(detect(net.predict(input, nn::Mode::mc_dropout, &rng), well.depth_start, well.depth_step).depth_ft);
  }
  d.uncertainty_ft = population_stddev(std::move(depths));
  return d;
}

Detection validate_detection(Detection detection, double prob_threshold, double uncertainty_threshold_ft) {
  if (prob_threshold < 0.0 || uncertainty_threshold_ft < 0.0) {
    throw Error(ErrorCode::invalid_argument, "validity thresholds must be non-negative");
  }
  detection.valid = detection.probability > prob_threshold && detection.uncertainty_ft < uncertainty_threshold_ft;
  return detection;
}

std::vector<Detection> predict_wells(const MarkerNet& net, const NormStats& norm, std::span<const WellLog> wells,
                                     const InferenceConfig& config) {
  std::vector<Detection> out;
  out.reserve(wells.size());
  for (const auto& well : wells) {
    if (well.channels != norm.channels) {
      std::string have, want;
      for (const auto& c : well.channels) have += (have.empty() ? "" : ",") + c;
      for (const auto& c : norm.channels) want += (want.empty() ? "" : ",") + c;
      throw Error(ErrorCode::channel_mismatch,
                  "well " + well.id + " has channels [" + have + "] but the model expects [" + want + "]");
    }
    const Tensor input = norm.apply(well.samples);
    out.push_back(validate_detection(mc_dropout_detect(net, input, well, config.mc_passes, config.seed),
                                     config.prob_threshold, config.uncertainty_threshold_ft));
  }
  return out;
}

void save_detections_csv(std::span<const Detection> detections, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << "well_id,marker,depth_ft,probability,uncertainty_ft,valid\n";
  for (const auto& d : detections) {
    out << d.well_id << ',' << d.marker << ',' << format_double(d.depth_ft) << ',' << format_double(d.probability)
        << ',' << format_double(d.uncertainty_ft) << ',' << (d.valid ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

std::vector<Detection> load_detections_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for reading");
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw Error(ErrorCode::empty_file, path.string() + ": empty file");
  const auto header = csv::split(lines[0]);
  const std::vector<std::string> expected{"well_id", "marker", "depth_ft", "probability", "uncertainty_ft", "valid"};
  if (header != expected) {
    throw Error(ErrorCode::missing_column, path.string() + ": header must be " +
                                               "well_id,marker,depth_ft,probability,uncertainty_ft,valid");
  }
  std::vector<Detection> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = csv::split(lines[r]);
    const std::string where = path.string() + ": row " + std::to_string(r + 1);
    if (cells.size() < expected.size()) throw Error(ErrorCode::missing_column, where + " is short");
    Detection d;
    d.well_id = cells[0];
    d.marker = cells[1];
    const auto depth = csv::parse_double(cells[2]);
    const auto prob = csv::parse_double(cells[3]);
    const auto unc = csv::parse_double(cells[4]);
    if (!depth) throw Error(ErrorCode::unparsable_depth, where + ": bad depth '" + cells[2] + "'");
    if (!prob || !unc) throw Error(ErrorCode::non_numeric_cell, where + ": non-numeric probability/uncertainty");
    if (cells[5] != "0" && cells[5] != "1") throw Error(ErrorCode::non_numeric_cell, where + ": valid must be 0 or 1");
    d.depth_ft = *depth;
    d.probability = *prob;
    d.uncertainty_ft = *unc;
    d.valid = cells[5] == "1";
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<CurveRow> prediction_curves(const MarkerNet& net, const NormStats& norm, std::span<const WellLog> wells) {
  std::vector<CurveRow> rows;
  for (const auto& well : wells) {
    const Tensor input = norm.apply(well.samples);
    const auto probs = net.predict(input, nn::Mode::eval);
    const auto scores = net.attention_scores(input);
    for (std::size_t t = 0; t < probs.size(); ++t) rows.push_back({well.id, well.depth_at(t), probs[t], scores[t]});
  }
  return rows;
}

void save_curves_csv(std::span<const CurveRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << "well_id,depth_ft,probability,attention_score\n";
  for (const auto& r : rows) {
    out << r.well_id << ',' << format_double(r.depth_ft) << ',' << format_double(r.probability) << ','
        << format_double(r.attention_score) << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

}  // namespace seqmark
