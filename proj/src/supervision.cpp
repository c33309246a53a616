#include "seqmark/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqmark/error.hpp"

namespace seqmark {

std::vector<double> one_hot_label(std::size_t length, std::size_t marker_index) {
  if (marker_index >= length) {
    throw Error(ErrorCode::out_of_range, "marker index " + std::to_string(marker_index) +
                                             " outside label of length " + std::to_string(length));
  }
  std::vector<double> label(length, 0.0);
  label[marker_index] = 1.0;
  return label;
}

SmoothedLabel gaussian_smooth_label(std::span<const double> one_hot, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_argument, "smoothing sigma must be positive");
  if (one_hot.empty()) throw Error(ErrorCode::invalid_argument, "empty label");
  const auto peak = std::max_element(one_hot.begin(), one_hot.end());
  if (*peak <= 0.0) throw Error(ErrorCode::invalid_argument, "label has no positive entry");

  const auto reach = static_cast<std::ptrdiff_t>(std::floor(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
    const double dd = static_cast<double>(d);
    kernel[static_cast<std::size_t>(d + reach)] = std::exp(-(dd * dd) / (2.0 * sigma * sigma));
  }

  const auto T = static_cast<std::ptrdiff_t>(one_hot.size());
  std::vector<double> out(one_hot.size(), 0.0);
  for (std::ptrdiff_t s = 0; s < T; ++s) {
    const double v = one_hot[static_cast<std::size_t>(s)];
    if (v == 0.0) continue;
    for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
      const std::ptrdiff_t t = s + d;
      if (t < 0 || t >= T) continue;
      out[static_cast<std::size_t>(t)] += v * kernel[static_cast<std::size_t>(d + reach)];
    }
  }
  const auto top = std::max_element(out.begin(), out.end());
  const auto index = static_cast<std::size_t>(top - out.begin());
  const double norm = *top;
  for (double& v : out) v /= norm;
  return SmoothedLabel{std::move(out), index, sigma};
}

namespace {

void check_lengths(std::size_t p, std::size_t y) {
  if (p != y) {
    throw Error(ErrorCode::shape_mismatch,
                "bce length mismatch: " + std::to_string(p) + " probabilities vs " + std::to_string(y) + " targets");
  }
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

// -[y ln p + (1-y) ln(1-p)], arranged so p = 1/2 gives ln 2 for any y.
double bce_term(double p, double y) {
  const double q = clamp_probability(p);
  const double log_p = std::log(q);
  const double log_not_p = std::log(1.0 - q);
  return -(log_not_p + y * (log_p - log_not_p));
}

}  // namespace

double bce_loss(std::span<const double> probabilities, std::span<const double> targets) {
  check_lengths(probabilities.size(), targets.size());
  if (probabilities.empty()) throw Error(ErrorCode::invalid_argument, "bce of empty vectors");
  // Running mean: exact when every term is equal.
  double m = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    m += (bce_term(probabilities[i], targets[i]) - m) / static_cast<double>(i + 1);
  }
  return m;
}

ad::Var bce_loss(ad::Var probabilities, std::span<const double> targets) {
  const Tensor& pv = probabilities.value();
  if (pv.rank() != 1) {
    throw Error(ErrorCode::shape_mismatch, "bce expects a rank-1 probability vector, got " + to_string(pv.shape()));
  }
  const double loss = bce_loss(pv.data(), targets);
  std::vector<double> y(targets.begin(), targets.end());
  const auto ip = probabilities.id();
  return probabilities.tape().record(
      ad::OpKind::bce, Tensor::scalar(loss), {ip}, [ip, y = std::move(y)](const Tensor& g, ad::GradSink& s) {
        auto p = s.value(ip).data();
        auto d = s.grad(ip).data();
        const double scale = g[0] / static_cast<double>(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (p[i] < kProbabilityClamp || p[i] > 1.0 - kProbabilityClamp) continue;
          d[i] += scale * (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]));
        }
      });
}

}  // namespace seqmark
