#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "seqmark/data_io.hpp"
#include "seqmark/marker_net.hpp"

namespace seqmark {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;  // epochs without val-loss improvement before stopping
  std::uint64_t seed = 42;
  double test_fraction = 0.2;  // of all wells
  double val_fraction = 0.25;  // of the train+val wells
  bool smoothing = true;
  double sigma = 3.0;  // samples

  void validate() const;
};

/// Well indices per subset; disjoint and exhaustive.
struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then test = round(n * test_fraction), val = round(rest * val_fraction),
/// train takes what remains.
DatasetSplit split_dataset(std::size_t n_wells, const TrainConfig& config);

struct AdamState {
  std::vector<Tensor> m, v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update. A null gradient leaves that parameter and its moments untouched.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
               const AdamConfig& config);

class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch's validation loss; true when it is a new best.
  bool update(double val_loss);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_; }
  std::size_t epochs() const noexcept { return epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct TrainHistory {
  double initial_val_loss = 0.0;
  std::vector<double> train_loss;  // per epoch, 1-based epochs map to index + 1
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
};

struct TrainedModel {
  MarkerNet net;
  NormStats norm;
  TrainHistory history;
  DatasetSplit split;
  std::size_t skipped_wells = 0;  // train/val wells without a pick for the marker
};

struct EpochReport {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  bool improved;
};

/// Per-well training target: smoothed or raw one-hot.
std::vector<double> make_target(std::size_t length, std::size_t marker_index, const TrainConfig& config);

/// Trains one model for `marker` on the train split, early-stopped on the val
/// split, and returns the best-validation parameters.
TrainedModel train_marker_model(const Dataset& data, const std::string& marker, const NetConfig& net_config,
                                const TrainConfig& train_config,
                                const std::function<void(const EpochReport&)>& on_epoch = {});

/// Writes `epoch,train_loss,val_loss`; epoch 0 carries the initial validation loss.
void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace seqmark
