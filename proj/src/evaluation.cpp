#include "seqmark/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include "seqmark/error.hpp"

namespace seqmark {

double error_ft(std::size_t expert_index, std::size_t ml_index, double depth_step) {
  const std::size_t gap = expert_index > ml_index ? expert_index - ml_index : ml_index - expert_index;
  return static_cast<double>(gap) * depth_step;
}

double precision_at(std::span<const double> errors, double tolerance_ft) {
  if (errors.empty()) throw Error(ErrorCode::undefined_precision, "precision is undefined with no valid detections");
  std::size_t hits = 0;
  for (double e : errors) hits += e <= tolerance_ft ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double recall(std::size_t detected, std::size_t total) {
  if (total == 0) throw Error(ErrorCode::invalid_argument, "recall needs at least one test well");
  if (detected > total) {
    throw Error(ErrorCode::invalid_argument, "recall: " + std::to_string(detected) + " detections exceed " +
                                                 std::to_string(total) + " test wells");
  }
  return static_cast<double>(detected) / static_cast<double>(total);
}

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Histogram error_histogram(std::span<const double> errors, double bin_width_ft, double max_ft) {
  if (!(bin_width_ft > 0.0)) throw Error(ErrorCode::invalid_argument, "histogram bin width must be positive");
  if (!(max_ft > 0.0)) throw Error(ErrorCode::invalid_argument, "histogram range must be positive");
  const auto bins = static_cast<std::size_t>(std::ceil(max_ft / bin_width_ft - 1e-9));
  Histogram h;
  for (std::size_t k = 0; k <= bins; ++k) h.edges.push_back(std::min(static_cast<double>(k) * bin_width_ft, max_ft));
  h.counts.assign(bins + 1, 0);
  for (double e : errors) {
    if (e >= max_ft) {
      ++h.counts[bins];
      continue;
    }
    auto k = static_cast<std::size_t>(std::floor(std::max(e, 0.0) / bin_width_ft));
    // floor can land one bin low when k*w is not exactly representable
    while (k + 1 < bins && e >= h.edges[k + 1]) ++k;
    while (k > 0 && e < h.edges[k]) --k;
    ++h.counts[k];
  }
  return h;
}

EvalReport evaluate_dataset(std::span<const Detection> detections, std::span<const MarkerPick> picks,
                            std::span<const double> tolerances, double depth_step) {
  if (!(depth_step > 0.0)) throw Error(ErrorCode::invalid_argument, "depth step must be positive");
  std::map<std::pair<std::string, std::string>, double> truth;
  for (const auto& p : picks) truth[{p.well_id, p.marker}] = p.depth_ft;

  std::map<std::string, MarkerMetrics> by_marker;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& d : detections) {
    if (!seen.insert({d.well_id, d.marker}).second) {
      throw Error(ErrorCode::duplicate_pick, "duplicate detection for well " + d.well_id + ", marker " + d.marker);
    }
    const auto it = truth.find({d.well_id, d.marker});
    if (it == truth.end()) {
      throw Error(ErrorCode::missing_truth, "no expert pick for well " + d.well_id + ", marker " + d.marker);
    }
    auto& m = by_marker[d.marker];
    m.marker = d.marker;
    ++m.wells;
    if (!d.valid) continue;
    ++m.valid;
    // ml depth lies on the well grid, so rounding the offset matches pick_to_index
    const double offset = std::floor((it->second - d.depth_ft) / depth_step + 0.5);
    m.errors.push_back(std::fabs(offset) * depth_step);
  }

  EvalReport report;
  report.tolerances.assign(tolerances.begin(), tolerances.end());
  std::vector<double> pooled;
  for (auto& [name, m] : by_marker) {
    std::sort(m.errors.begin(), m.errors.end());
    for (double t : tolerances) {
      m.precision.push_back(m.errors.empty() ? std::nullopt : std::optional<double>(precision_at(m.errors, t)));
    }
    m.recall = recall(m.valid, m.wells);
    pooled.insert(pooled.end(), m.errors.begin(), m.errors.end());
    report.markers.push_back(std::move(m));
  }

  auto mean_defined = [&](auto&& value_of) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& m : report.markers) {
      if (const std::optional<double> v = value_of(m)) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  for (std::size_t k = 0; k < tolerances.size(); ++k) {
    report.mean_precision.push_back(mean_defined([k](const MarkerMetrics& m) { return m.precision[k]; }));
  }
  report.mean_precision_2ft = mean_defined([](const MarkerMetrics& m) -> std::optional<double> {
    if (m.errors.empty()) return std::nullopt;
    return precision_at(m.errors, kF1Tolerance);
  });
  if (!report.markers.empty()) {
    report.mean_recall = *mean_defined([](const MarkerMetrics& m) -> std::optional<double> { return m.recall; });
  }
  report.f1_2ft = report.mean_precision_2ft ? f1_score(*report.mean_precision_2ft, report.mean_recall) : 0.0;
  report.histogram = error_histogram(pooled);
  return report;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

void save_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << "marker,d_T,precision,recall\n";
  for (const auto& m : report.markers) {
    for (std::size_t k = 0; k < report.tolerances.size(); ++k) {
      out << m.marker << ',' << format_double(report.tolerances[k]) << ',' << cell(m.precision[k]) << ','
          << format_double(m.recall) << '\n';
    }
  }
  for (std::size_t k = 0; k < report.tolerances.size(); ++k) {
    out << "MEAN," << format_double(report.tolerances[k]) << ',' << cell(report.mean_precision[k]) << ','
        << format_double(report.mean_recall) << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

void save_histogram_csv(const Histogram& histogram, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << "bin_lo,bin_hi,count\n";
  const std::size_t regular = histogram.edges.size() - 1;
  for (std::size_t k = 0; k < regular; ++k) {
    out << format_double(histogram.edges[k]) << ',' << format_double(histogram.edges[k + 1]) << ','
        << histogram.counts[k] << '\n';
  }
  out << format_double(histogram.edges.back()) << ",inf," << histogram.counts[regular] << '\n';
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

}  // namespace seqmark
