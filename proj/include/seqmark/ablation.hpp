#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqmark/config.hpp"
#include "seqmark/evaluation.hpp"

namespace seqmark {

struct AblationCell {
  HeadInput mode = HeadInput::combined;
  bool smoothing = true;
  std::uint64_t seed = 0;
  std::optional<double> f1;  // empty when the cell failed
  std::string error;
  EvalReport report;
  std::vector<Detection> detections;
};

/// Trains one model per marker under (mode, smoothing, seed), runs MC-dropout
/// detection on each model's test wells and evaluates them together.
AblationCell run_cell(const Dataset& data, std::span<const std::string> markers, const RunConfig& base,
                      HeadInput mode, bool smoothing, std::uint64_t seed);

/// Every (mode, smoothing, seed) cell, ordered by mode, smoothing (on first), seed.
/// Up to `threads` cells run at once; a failing cell records its error and the rest continue.
std::vector<AblationCell> run_ablation(const Dataset& data, std::span<const std::string> markers,
                                       std::span<const std::uint64_t> seeds, const RunConfig& base,
                                       std::size_t threads = 1,
                                       const std::function<void(const AblationCell&)>& on_cell = {});

/// `mode,smoothing,seed,F1`.
void save_ablation_csv(std::span<const AblationCell> cells, const std::filesystem::path& path);

struct AblationSummaryRow {
  HeadInput mode;
  bool smoothing;
  std::optional<double> mean_f1;  // over cells that succeeded
  std::size_t cells;
  std::size_t failed;
};

std::vector<AblationSummaryRow> summarize_ablation(std::span<const AblationCell> cells);
/// `mode,smoothing,mean_F1,cells,failed`.
void save_ablation_summary_csv(std::span<const AblationSummaryRow> rows, const std::filesystem::path& path);

}  // namespace seqmark
