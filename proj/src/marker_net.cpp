#include "seqmark/marker_net.hpp"

#include <cmath>
#include <string>

#include "seqmark/error.hpp"

namespace seqmark {

using ad::Var;
using nn::ForwardContext;

std::string_view to_string(HeadInput mode) {
  switch (mode) {
    case HeadInput::combined: return "combined";
    case HeadInput::global_only: return "global";
    case HeadInput::local_only: return "local";
  }
  return "combined";
}

HeadInput parse_head_input(std::string_view text) {
  if (text == "combined") return HeadInput::combined;
  if (text == "global" || text == "global_only") return HeadInput::global_only;
  if (text == "local" || text == "local_only") return HeadInput::local_only;
  throw Error(ErrorCode::config_error, "unknown mode '" + std::string(text) + "' (expected combined|global|local)");
}

std::string_view activation_name(ad::Activation kind) {
  switch (kind) {
    case ad::Activation::tanh: return "tanh";
    case ad::Activation::sigmoid: return "sigmoid";
    case ad::Activation::relu: return "relu";
  }
  return "relu";
}

ad::Activation parse_activation(std::string_view text) {
  if (text == "relu") return ad::Activation::relu;
  if (text == "tanh") return ad::Activation::tanh;
  if (text == "sigmoid") return ad::Activation::sigmoid;
  throw Error(ErrorCode::config_error, "unknown activation '" + std::string(text) + "' (expected relu|tanh|sigmoid)");
}

void NetConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::config_error, msg); };
  if (input_channels < 1 || input_channels > 3) fail("input_channels must be 1..3");
  if (global.depth < 1) fail("global depth must be at least 1");
  if (global.stage_channels.size() != global.depth) {
    fail("global stage_channels needs " + std::to_string(global.depth) + " entries");
  }
  if (global.kernels.empty()) fail("global kernels must not be empty");
  for (auto k : global.kernels) {
    if (k % 2 == 0) fail("global kernel sizes must be odd");
  }
  for (auto c : global.stage_channels) {
    if (c < global.kernels.size()) fail("each global stage needs at least one channel per kernel");
  }
  if (local.layers < 1) fail("local layers must be at least 1");
  if (local.kernel % 2 == 0) fail("local kernel size must be odd");
  if (local.dilations.empty()) fail("local dilations must not be empty");
  for (auto d : local.dilations) {
    if (d < 1) fail("local dilations must be positive");
  }
  if (local.channels < local.dilations.size()) fail("local channels must cover every dilation branch");
  if (fusion_channels < 1) fail("fusion_channels must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

Var attention_fuse(Var global, Var local) {
  if (global.shape() != local.shape()) {
    throw Error(ErrorCode::shape_mismatch, "attention fusion of shapes " + to_string(global.shape()) + " and " +
                                               to_string(local.shape()));
  }
  return ad::mul(global, local);
}

namespace {

ConvUnit make_unit(std::size_t in_channels, std::size_t out_channels, const std::vector<std::size_t>& kernels,
                   const std::vector<std::size_t>& dilations, Rng& rng) {
  const std::size_t n = std::max(kernels.size(), dilations.size());
  const auto widths = nn::split_channels(out_channels, n);
  std::vector<nn::InceptionBranch> branches;
  for (std::size_t i = 0; i < n; ++i) {
    branches.push_back({kernels.size() == 1 ? kernels[0] : kernels[i],
                        dilations.size() == 1 ? dilations[0] : dilations[i], widths[i]});
  }
  return ConvUnit{nn::InceptionBlock::create(in_channels, branches, rng), nn::LayerNorm::create(out_channels)};
}

// Start the head near the marker base rate so early training is not spent
// unlearning a 0.5 prior on every depth.
constexpr double kHeadBiasInit = -4.0;

}  // namespace

MarkerNet MarkerNet::create(std::string marker, const NetConfig& config, std::uint64_t seed) {
  config.validate();
  MarkerNet net;
  net.marker_ = std::move(marker);
  net.config_ = config;
  Rng rng(seed);
  const auto& g = config.global;
  const std::vector<std::size_t> unit_dilation{1};

  std::size_t in = config.input_channels;
  for (std::size_t i = 0; i < g.depth; ++i) {
    net.encoder_.push_back(make_unit(in, g.stage_channels[i], g.kernels, unit_dilation, rng));
    in = g.stage_channels[i];
  }
  net.bottleneck_ = make_unit(in, g.stage_channels.back(), g.kernels, unit_dilation, rng);
  std::size_t below = g.stage_channels.back();
  net.decoder_.resize(g.depth);
  for (std::size_t i = g.depth; i-- > 0;) {
    net.decoder_[i] = make_unit(below + g.stage_channels[i], g.stage_channels[i], g.kernels, unit_dilation, rng);
    below = g.stage_channels[i];
  }
  net.global_proj_ = nn::Conv1dLayer::create(g.stage_channels.front(), config.fusion_channels, 1, 1, rng);

  const auto& l = config.local;
  in = config.input_channels;
  const std::vector<std::size_t> local_kernel{l.kernel};
  for (std::size_t i = 0; i < l.layers; ++i) {
    net.local_.push_back(make_unit(in, l.channels, local_kernel, l.dilations, rng));
    in = l.channels;
  }
  net.local_proj_ = nn::Conv1dLayer::create(l.channels, config.fusion_channels, 1, 1, rng);
  net.head_ = nn::Conv1dLayer::create(config.fusion_channels, 1, 1, 1, rng);
  net.head_.bias[0] = kHeadBiasInit;
  return net;
}

void MarkerNet::check_input(const Var& x) const {
  if (x.value().rank() != 2 || x.value().extent(0) != config_.input_channels) {
    throw Error(ErrorCode::shape_mismatch, "marker net expects [" + std::to_string(config_.input_channels) +
                                               ", T] input, got " + to_string(x.shape()));
  }
}

Var MarkerNet::run_unit(ForwardContext& ctx, Var x, const ConvUnit& unit) const {
  Var h = nn::inception_forward(ctx, x, unit.conv);
  h = nn::layer_norm_forward(ctx, h, unit.norm);
  h = ad::activation(config_.hidden_activation, h);
  return nn::dropout_forward(ctx, h, nn::Dropout{config_.dropout});
}

Var MarkerNet::global_forward(ForwardContext& ctx, Var x) const {
  check_input(x);
  const std::size_t T = x.value().extent(1);
  const std::size_t block = min_length();
  if (T < block) {
    throw Error(ErrorCode::invalid_argument, "sequence length " + std::to_string(T) + " is below the minimum " +
                                                 std::to_string(block) + " for global depth " +
                                                 std::to_string(config_.global.depth));
  }
  const std::size_t padded = (T + block - 1) / block * block;
  Var h = padded > T ? ad::pad(x, 1, 0, padded - T) : x;

  std::vector<Var> skips;
  for (const auto& unit : encoder_) {
    h = run_unit(ctx, h, unit);
    skips.push_back(h);
    h = nn::avg_pool(h);
  }
  h = run_unit(ctx, h, bottleneck_);
  for (std::size_t i = decoder_.size(); i-- > 0;) {
    const Var parts[] = {nn::upsample_linear(h), skips[i]};
    h = run_unit(ctx, ad::concat(parts, 0), decoder_[i]);
  }
  h = ad::tanh(nn::conv1d_forward(ctx, h, global_proj_));
  return padded > T ? ad::slice(h, 1, 0, T) : h;
}

Var MarkerNet::local_forward(ForwardContext& ctx, Var x) const {
  check_input(x);
  Var h = x;
  for (const auto& unit : local_) h = run_unit(ctx, h, unit);
  return nn::conv1d_forward(ctx, h, local_proj_);
}

Var MarkerNet::forward(ForwardContext& ctx, Var x) const {
  Var features;
  switch (config_.head_input) {
    case HeadInput::combined:
      features = attention_fuse(global_forward(ctx, x), local_forward(ctx, x));
      break;
    case HeadInput::global_only:
      features = global_forward(ctx, x);
      break;
    case HeadInput::local_only:
      features = local_forward(ctx, x);
      break;
  }
  Var logits = nn::conv1d_forward(ctx, features, head_);
  const std::size_t T = logits.value().extent(1);
  return ad::reshape(ad::sigmoid(logits), Shape{T});
}

std::vector<double> MarkerNet::predict(const Tensor& x, nn::Mode mode, Rng* rng) const {
  ad::Tape tape;
  ForwardContext ctx(tape, mode, rng);
  return forward(ctx, tape.leaf(x)).value().values();
}

std::vector<double> MarkerNet::attention_scores(const Tensor& x) const {
  ad::Tape tape;
  ForwardContext ctx(tape, nn::Mode::eval);
  return ad::mean(global_forward(ctx, tape.leaf(x)), 0).value().values();
}

template <typename Self, typename Fn>
void MarkerNet::for_each_parameter(Self& self, Fn&& fn) {
  auto conv = [&](const std::string& name, auto& layer) {
    fn(name + ".weight", layer.weight);
    fn(name + ".bias", layer.bias);
  };
  auto unit = [&](const std::string& name, auto& u) {
    for (std::size_t b = 0; b < u.conv.branches.size(); ++b) conv(name + ".branch" + std::to_string(b), u.conv.branches[b]);
    fn(name + ".norm.gamma", u.norm.gamma);
    fn(name + ".norm.beta", u.norm.beta);
  };
  for (std::size_t i = 0; i < self.encoder_.size(); ++i) unit("global.enc" + std::to_string(i), self.encoder_[i]);
  unit("global.bottleneck", self.bottleneck_);
  for (std::size_t i = 0; i < self.decoder_.size(); ++i) unit("global.dec" + std::to_string(i), self.decoder_[i]);
  conv("global.proj", self.global_proj_);
  for (std::size_t i = 0; i < self.local_.size(); ++i) unit("local.layer" + std::to_string(i), self.local_[i]);
  conv("local.proj", self.local_proj_);
  conv("head", self.head_);
}

std::vector<std::pair<std::string, Tensor*>> MarkerNet::parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for_each_parameter(*this, [&](std::string name, Tensor& t) { out.emplace_back(std::move(name), &t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> MarkerNet::parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for_each_parameter(*this, [&](std::string name, const Tensor& t) { out.emplace_back(std::move(name), &t); });
  return out;
}

std::size_t MarkerNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += t->size();
  return n;
}

}  // namespace seqmark
