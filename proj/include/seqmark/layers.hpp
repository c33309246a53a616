#pragma once

// 1D building blocks over `[channels, length]` sequences, each recorded on an ad::Tape.

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/random.hpp"
#include "seqmark/tensor.hpp"

namespace seqmark::nn {

enum class Mode {
  train,
  eval,
  mc_dropout,  // eval-time statistics with dropout sampling switched on
};

/// Per-forward-pass state: the tape, the mode, the dropout stream, and the
/// parameter tensors already bound as tape leaves.
class ForwardContext {
 public:
  ForwardContext(ad::Tape& tape, Mode mode, Rng* rng = nullptr) : tape_(tape), mode_(mode), rng_(rng) {}

  ad::Tape& tape() noexcept { return tape_; }
  Mode mode() const noexcept { return mode_; }
  bool dropout_active() const noexcept { return mode_ != Mode::eval; }
  Rng& rng();

  /// Leaf for a parameter tensor; the same tensor maps to the same Var for the
  /// lifetime of the context.
  ad::Var param(const Tensor& t);
  const ad::Var* bound(const Tensor& t) const;

 private:
  ad::Tape& tape_;
  Mode mode_;
  Rng* rng_;
  std::unordered_map<const Tensor*, ad::Var> bound_;
};

/// Stride-1 convolution with symmetric "same" zero padding.
struct Conv1dLayer {
  Tensor weight;  // [out, in, kernel]
  Tensor bias;    // [out]
  std::size_t dilation = 1;

  /// He-uniform weights, zero bias. `kernel` must be odd.
  static Conv1dLayer create(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                            std::size_t dilation, Rng& rng);

  std::size_t out_channels() const { return weight.extent(0); }
  std::size_t in_channels() const { return weight.extent(1); }
  std::size_t kernel_size() const { return weight.extent(2); }
};

struct InceptionBranch {
  std::size_t kernel = 3;
  std::size_t dilation = 1;
  std::size_t out_channels = 1;
};

/// Parallel convolutions over the same input, concatenated along channels.
struct InceptionBlock {
  std::vector<Conv1dLayer> branches;

  static InceptionBlock create(std::size_t in_channels, const std::vector<InceptionBranch>& branches, Rng& rng);
  std::size_t out_channels() const;
  std::size_t in_channels() const { return branches.front().in_channels(); }
};

/// Split `total` channels over `n` branches, remainder to the first ones.
std::vector<std::size_t> split_channels(std::size_t total, std::size_t n);

/// Normalization across channels at each depth position.
struct LayerNorm {
  Tensor gamma;  // [channels]
  Tensor beta;   // [channels]
  double eps = 1e-5;

  static LayerNorm create(std::size_t channels);
};

/// Inverted dropout; identity whenever the context is in eval mode.
struct Dropout {
  double rate = 0.1;
};

// Raw differentiable kernels.
ad::Var conv1d(ad::Var x, ad::Var weight, ad::Var bias, std::size_t dilation);
/// Non-overlapping windows of two; an odd trailing sample is its own window.
ad::Var avg_pool(ad::Var x);
/// out[2t] = x[t], out[2t+1] = (x[t] + x[t+1]) / 2, last sample clamped.
ad::Var upsample_linear(ad::Var x);
ad::Var layer_norm(ad::Var x, ad::Var gamma, ad::Var beta, double eps);
ad::Var dropout(ad::Var x, double rate, Rng& rng);

// Layer-level forward passes that bind parameters through the context.
ad::Var conv1d_forward(ForwardContext& ctx, ad::Var x, const Conv1dLayer& layer);
ad::Var inception_forward(ForwardContext& ctx, ad::Var x, const InceptionBlock& block);
ad::Var layer_norm_forward(ForwardContext& ctx, ad::Var x, const LayerNorm& ln);
ad::Var dropout_forward(ForwardContext& ctx, ad::Var x, const Dropout& d);

}  // namespace seqmark::nn
