#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seqmark/data_io.hpp"
#include "seqmark/marker_net.hpp"

namespace seqmark {

struct Detection {
  std::string well_id;
  std::string marker;
  std::size_t depth_index = 0;
  double depth_ft = 0.0;
  double probability = 0.0;     // max_j P_j
  double uncertainty_ft = 0.0;  // std of MC-dropout detection depths
  bool valid = false;
};

/// Argmax of the probability curve; ties go to the smallest index.
Detection detect(std::span<const double> probabilities, double depth_start, double depth_step);

/// Depth and probability from one eval-mode pass; uncertainty is the population
/// standard deviation of the detected depth over `n_passes` dropout passes. Pass
/// i draws its masks from derive_stream(master_seed, i).
Detection mc_dropout_detect(const MarkerNet& net, const Tensor& input, const WellLog& well, std::size_t n_passes,
                            std::uint64_t master_seed);

/// valid = probability > prob_threshold && uncertainty < uncertainty_threshold_ft.
Detection validate_detection(Detection detection, double prob_threshold, double uncertainty_threshold_ft = 5.0);

/// Population standard deviation; exact zero for constant input, independent of order.
double population_stddev(std::vector<double> values);

struct InferenceConfig {
  std::size_t mc_passes = 30;
  double prob_threshold = 0.5;
  double uncertainty_threshold_ft = 5.0;
  std::uint64_t seed = 42;
};

/// Normalizes each well with `norm`, runs MC-dropout detection and the validity filter.
std::vector<Detection> predict_wells(const MarkerNet& net, const NormStats& norm, std::span<const WellLog> wells,
                                     const InferenceConfig& config);

/// `well_id,marker,depth_ft,probability,uncertainty_ft,valid`.
void save_detections_csv(std::span<const Detection> detections, const std::filesystem::path& path);
std::vector<Detection> load_detections_csv(const std::filesystem::path& path);

struct CurveRow {
  std::string well_id;
  double depth_ft;
  double probability;
  double attention_score;
};

/// Eval-mode probability and attention score at every depth of every well.
std::vector<CurveRow> prediction_curves(const MarkerNet& net, const NormStats& norm, std::span<const WellLog> wells);
void save_curves_csv(std::span<const CurveRow> rows, const std::filesystem::path& path);

}  // namespace seqmark
