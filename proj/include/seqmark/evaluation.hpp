#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqmark/data_io.hpp"
#include "seqmark/inference.hpp"

namespace seqmark {

/// |expert - ml| * depth_step, in ft.
double error_ft(std::size_t expert_index, std::size_t ml_index, double depth_step = 0.5);

/// Fraction of errors <= tolerance. Throws undefined_precision when `errors` is empty.
double precision_at(std::span<const double> errors, double tolerance_ft);

/// M / N. Throws when N == 0 or M > N.
double recall(std::size_t detected, std::size_t total);

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double precision, double recall);

struct Histogram {
  std::vector<double> edges;          // bin k covers [edges[k], edges[k+1])
  std::vector<std::size_t> counts;    // edges.size() - 1 regular bins, then one overflow bin for e >= max
};

Histogram error_histogram(std::span<const double> errors, double bin_width_ft = 0.5, double max_ft = 10.0);

struct MarkerMetrics {
  std::string marker;
  std::size_t valid = 0;  // M
  std::size_t wells = 0;  // N
  std::vector<std::optional<double>> precision;  // per tolerance; empty optional when M == 0
  double recall = 0.0;
  std::vector<double> errors;  // ft, valid detections only, sorted
};

struct EvalReport {
  std::vector<double> tolerances;
  std::vector<MarkerMetrics> markers;  // sorted by name
  /// Mean over markers whose precision is defined.
  std::vector<std::optional<double>> mean_precision;
  double mean_recall = 0.0;
  std::optional<double> mean_precision_2ft;
  double f1_2ft = 0.0;
  Histogram histogram;
};

inline constexpr double kF1Tolerance = 2.0;

/// Each detection row is one test well for its marker; only valid rows enter M
/// and the error lists. Depth errors are measured in samples of each well's
/// step, taken from `depth_step`.
EvalReport evaluate_dataset(std::span<const Detection> detections, std::span<const MarkerPick> picks,
                            std::span<const double> tolerances, double depth_step = 0.5);

/// `marker,d_T,precision,recall` with per-marker rows and MEAN rows; NA marks undefined precision.
void save_report_csv(const EvalReport& report, const std::filesystem::path& path);
/// `bin_lo,bin_hi,count`; the overflow bin has bin_hi = inf.
void save_histogram_csv(const Histogram& histogram, const std::filesystem::path& path);

}  // namespace seqmark
