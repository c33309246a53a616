#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqmark/autodiff.hpp"

namespace seqmark {

struct SmoothedLabel {
  std::vector<double> values;  // peak-normalized, values[marker_index] == 1
  std::size_t marker_index = 0;
  double sigma = 0.0;  // samples
};

std::vector<double> one_hot_label(std::size_t length, std::size_t marker_index);

/// Convolves a one-hot label with a Gaussian kernel truncated at +-4 sigma and
/// rescales so the peak is exactly 1.
SmoothedLabel gaussian_smooth_label(std::span<const double> one_hot, double sigma);

/// Probabilities are clamped to [1e-12, 1 - 1e-12] before taking logs.
inline constexpr double kProbabilityClamp = 1e-12;

/// Mean binary cross-entropy over positions.
double bce_loss(std::span<const double> probabilities, std::span<const double> targets);
/// Differentiable version; `probabilities` is a rank-1 Var of the targets' length.
ad::Var bce_loss(ad::Var probabilities, std::span<const double> targets);

}  // namespace seqmark
