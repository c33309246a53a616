#pragma once

// Soft-attention marker detector: a U-Net style global view and a dilated
// local view, fused by elementwise gating, followed by a per-depth sigmoid head.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/layers.hpp"

namespace seqmark {

/// Which tensor feeds the detection head. The single-view settings exist for ablations.
enum class HeadInput { combined, global_only, local_only };

std::string_view to_string(HeadInput mode);
HeadInput parse_head_input(std::string_view text);

std::string_view activation_name(ad::Activation kind);
ad::Activation parse_activation(std::string_view text);

struct GlobalViewConfig {
  std::size_t depth = 3;                                 // pooling stages
  std::vector<std::size_t> stage_channels{16, 32, 64};   // one entry per stage
  std::vector<std::size_t> kernels{3, 7, 11};            // inception branch kernel sizes
};

struct LocalViewConfig {
  std::size_t layers = 4;
  std::size_t channels = 32;
  std::size_t kernel = 3;
  std::vector<std::size_t> dilations{1, 2, 4};
};

struct NetConfig {
  std::size_t input_channels = 1;
  GlobalViewConfig global;
  LocalViewConfig local;
  std::size_t fusion_channels = 32;
  double dropout = 0.1;
  ad::Activation hidden_activation = ad::Activation::relu;
  HeadInput head_input = HeadInput::combined;

  /// Throws config_error on inconsistent settings.
  void validate() const;
};

/// Convolution stage: inception conv, layer norm, activation, dropout.
struct ConvUnit {
  nn::InceptionBlock conv;
  nn::LayerNorm norm;
};

/// A = G ⊙ L.
ad::Var attention_fuse(ad::Var global, ad::Var local);

class MarkerNet {
 public:
  /// Fresh parameters drawn from `seed`.
  static MarkerNet create(std::string marker, const NetConfig& config, std::uint64_t seed);

  const std::string& marker() const noexcept { return marker_; }
  const NetConfig& config() const noexcept { return config_; }
  std::size_t min_length() const noexcept { return std::size_t{1} << config_.global.depth; }

  /// [C_in, T] -> [F, T] with every element in (-1, 1).
  ad::Var global_forward(nn::ForwardContext& ctx, ad::Var x) const;
  /// [C_in, T] -> [F, T], unsquashed.
  ad::Var local_forward(nn::ForwardContext& ctx, ad::Var x) const;
  /// [C_in, T] -> per-depth probability [T].
  ad::Var forward(nn::ForwardContext& ctx, ad::Var x) const;

  /// Convenience wrapper running forward() on a private tape.
  std::vector<double> predict(const Tensor& x, nn::Mode mode, Rng* rng = nullptr) const;
  /// Mean of G over the feature axis, eval mode.
  std::vector<double> attention_scores(const Tensor& x) const;

  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;
  std::size_t parameter_count() const;

 private:
  MarkerNet() = default;

  ad::Var run_unit(nn::ForwardContext& ctx, ad::Var x, const ConvUnit& unit) const;
  void check_input(const ad::Var& x) const;
  template <typename Self, typename Fn>
  static void for_each_parameter(Self& self, Fn&& fn);

  std::string marker_;
  NetConfig config_;
  std::vector<ConvUnit> encoder_;
  ConvUnit bottleneck_;
  std::vector<ConvUnit> decoder_;  // decoder_[i] restores the resolution of encoder_[i]
  nn::Conv1dLayer global_proj_;
  std::vector<ConvUnit> local_;
  nn::Conv1dLayer local_proj_;
  nn::Conv1dLayer head_;
};

}  // namespace seqmark
