#include "seqmark/layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "seqmark/error.hpp"

namespace seqmark::nn {

using ad::GradSink;
using ad::OpKind;
using ad::Var;

Rng& ForwardContext::rng() {
  if (!rng_) throw Error(ErrorCode::invalid_argument, "dropout requires a random stream in this mode");
  return *rng_;
}

Var ForwardContext::param(const Tensor& t) {
  auto it = bound_.find(&t);
  if (it != bound_.end()) return it->second;
  Var v = tape_.leaf(t);
  bound_.emplace(&t, v);
  return v;
}

const Var* ForwardContext::bound(const Tensor& t) const {
  auto it = bound_.find(&t);
  return it == bound_.end() ? nullptr : &it->second;
}

Conv1dLayer Conv1dLayer::create(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                                std::size_t dilation, Rng& rng) {
  if (kernel % 2 == 0) throw Error(ErrorCode::invalid_argument, "kernel size must be odd");
  if (dilation == 0) throw Error(ErrorCode::invalid_argument, "dilation must be at least 1");
  Conv1dLayer layer{Tensor({out_channels, in_channels, kernel}), Tensor({out_channels}, 0.0), dilation};
  const double bound = std::sqrt(6.0 / static_cast<double>(in_channels * kernel));
  for (double& w : layer.weight.data()) w = uniform(rng, -bound, bound);
  return layer;
}

std::vector<std::size_t> split_channels(std::size_t total, std::size_t n) {
  if (n == 0 || total < n) {
    throw Error(ErrorCode::invalid_argument,
                "cannot split " + std::to_string(total) + " channels over " + std::to_string(n) + " branches");
  }
  std::vector<std::size_t> parts(n, total / n);
  for (std::size_t i = 0; i < total % n; ++i) ++parts[i];
  return parts;
}

InceptionBlock InceptionBlock::create(std::size_t in_channels, const std::vector<InceptionBranch>& branches,
                                      Rng& rng) {
  if (branches.empty()) throw Error(ErrorCode::invalid_argument, "inception block needs at least one branch");
  InceptionBlock block;
  for (const auto& b : branches) {
    block.branches.push_back(Conv1dLayer::create(in_channels, b.out_channels, b.kernel, b.dilation, rng));
  }
  return block;
}

std::size_t InceptionBlock::out_channels() const {
  std::size_t n = 0;
  for (const auto& b : branches) n += b.out_channels();
  return n;
}

LayerNorm LayerNorm::create(std::size_t channels) {
  return LayerNorm{Tensor({channels}, 1.0), Tensor({channels}, 0.0), 1e-5};
}

namespace {

void require_sequence(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw Error(ErrorCode::shape_mismatch, std::string(op) + " expects [channels, length], got " + to_string(x.shape()));
  }
}

// Valid output range [lo, hi) for a tap displaced by `off` on a length-T signal.
struct TapRange {
  std::size_t lo, hi;
};

TapRange tap_range(std::ptrdiff_t off, std::size_t T) {
  const auto t = static_cast<std::ptrdiff_t>(T);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(t, t - off);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Fixed 8-lane summation order: vectorizes without reassociation flags and
// stays bit-reproducible.
double lane_dot(const double* a, const double* b, std::size_t n) {
  double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t t = 0;
  for (; t + 8 <= n; t += 8) {
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[t + l] * b[t + l];
  }
  double acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; t < n; ++t) acc += a[t] * b[t];
  return acc;
}

double lane_sum(const double* a, std::size_t n) {
  double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t t = 0;
  for (; t + 8 <= n; t += 8) {
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[t + l];
  }
  double acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; t < n; ++t) acc += a[t];
  return acc;
}

constexpr std::size_t kMaxTaps = 32;

// dst[t] += sum_k w[k] * src[t + off[k]] over taps that land inside [0, T).
void accumulate_taps(double* dst, const double* src, const double* w, const std::ptrdiff_t* off, std::size_t K,
                     std::size_t T) {
  const auto t_len = static_cast<std::ptrdiff_t>(T);
  std::ptrdiff_t lo = 0, hi = t_len;
  for (std::size_t k = 0; k < K; ++k) {
    lo = std::max(lo, -off[k]);
    hi = std::min(hi, t_len - off[k]);
  }
  auto edge = [&](std::ptrdiff_t t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const std::ptrdiff_t j = t + off[k];
      if (j >= 0 && j < t_len) acc += w[k] * src[j];
    }
    dst[t] += acc;
  };
  if (hi <= lo) {
    for (std::ptrdiff_t t = 0; t < t_len; ++t) edge(t);
    return;
  }
  for (std::ptrdiff_t t = 0; t < lo; ++t) edge(t);
  for (std::ptrdiff_t t = hi; t < t_len; ++t) edge(t);
  double* d = dst + lo;
  const std::size_t n = static_cast<std::size_t>(hi - lo);
  // Two taps per sweep keeps the row in L1 while halving load/store traffic on dst.
  std::size_t k = 0;
  for (; k + 1 < K; k += 2) {
    const double* a = src + lo + off[k];
    const double* b = src + lo + off[k + 1];
    const double wa = w[k], wb = w[k + 1];
    for (std::size_t t = 0; t < n; ++t) d[t] += wa * a[t] + wb * b[t];
  }
  if (k < K) {
    const double* a = src + lo + off[k];
    const double wa = w[k];
    for (std::size_t t = 0; t < n; ++t) d[t] += wa * a[t];
  }
}

}  // namespace

Var conv1d(Var x, Var weight, Var bias, std::size_t dilation) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_sequence(xv, "conv1d");
  if (wv.rank() != 3 || bv.rank() != 1 || bv.extent(0) != wv.extent(0)) {
    throw Error(ErrorCode::shape_mismatch, "conv1d weight/bias shapes " + to_string(wv.shape()) + " and " +
                                               to_string(bv.shape()) + " are inconsistent");
  }
  const std::size_t C_in = xv.extent(0);
  const std::size_t T = xv.extent(1);
  const std::size_t C_out = wv.extent(0);
  const std::size_t K = wv.extent(2);
  if (wv.extent(1) != C_in) {
    throw Error(ErrorCode::shape_mismatch, "conv1d input has " + std::to_string(C_in) +
                                               " channels, weight expects " + std::to_string(wv.extent(1)));
  }
  const auto half = static_cast<std::ptrdiff_t>(K / 2);
  const auto dil = static_cast<std::ptrdiff_t>(dilation);

  if (K > kMaxTaps) throw Error(ErrorCode::invalid_argument, "conv1d supports at most 32 taps");
  std::array<std::ptrdiff_t, kMaxTaps> offsets{}, back_offsets{};
  for (std::size_t k = 0; k < K; ++k) {
    offsets[k] = (static_cast<std::ptrdiff_t>(k) - half) * dil;
    back_offsets[k] = -offsets[k];
  }

  Tensor out({C_out, T});
  const double* xd = xv.data().data();
  const double* wd = wv.data().data();
  double* od = out.data().data();
  for (std::size_t o = 0; o < C_out; ++o) {
    double* orow = od + o * T;
    std::fill(orow, orow + T, bv[o]);
    for (std::size_t c = 0; c < C_in; ++c) {
      accumulate_taps(orow, xd + c * T, wd + (o * C_in + c) * K, offsets.data(), K, T);
    }
  }

  const auto ix = x.id();
  const auto iw = weight.id();
  const auto ib = bias.id();
  return x.tape().record(OpKind::conv1d, std::move(out), {ix, iw, ib}, [=](const Tensor& g, GradSink& s) {
    const double* gd = g.data().data();
    const double* xd = s.value(ix).data().data();
    const double* wd = s.value(iw).data().data();
    double* gx = s.grad(ix).data().data();
    double* gw = s.grad(iw).data().data();
    double* gb = s.grad(ib).data().data();
    for (std::size_t o = 0; o < C_out; ++o) {
      const double* grow = gd + o * T;
      gb[o] += lane_sum(grow, T);
      for (std::size_t c = 0; c < C_in; ++c) {
        const double* xrow = xd + c * T;
        const std::size_t wbase = (o * C_in + c) * K;
        // dL/dx[s] = sum_k w[k] g[s - off[k]]; the transpose of the forward taps.
        accumulate_taps(gx + c * T, grow, wd + wbase, back_offsets.data(), K, T);
        for (std::size_t k = 0; k < K; ++k) {
          const auto r = tap_range(offsets[k], T);
          gw[wbase + k] += lane_dot(grow + r.lo, xrow + (static_cast<std::ptrdiff_t>(r.lo) + offsets[k]), r.hi - r.lo);
        }
      }
    }
  });
}

Var avg_pool(Var x) {
  const Tensor& xv = x.value();
  require_sequence(xv, "avg_pool");
  const std::size_t C = xv.extent(0);
  const std::size_t T = xv.extent(1);
  const std::size_t To = (T + 1) / 2;
  Tensor out({C, To});
  for (std::size_t c = 0; c < C; ++c) {
    auto src = xv.row(c);
    auto dst = out.row(c);
    for (std::size_t j = 0; j < T / 2; ++j) dst[j] = 0.5 * (src[2 * j] + src[2 * j + 1]);
    if (T % 2) dst[To - 1] = src[T - 1];
  }
  const auto ix = x.id();
  return x.tape().record(OpKind::avg_pool, std::move(out), {ix}, [=](const Tensor& g, GradSink& s) {
    Tensor& gx = s.grad(ix);
    for (std::size_t c = 0; c < C; ++c) {
      auto src = g.row(c);
      auto dst = gx.row(c);
      for (std::size_t j = 0; j < T / 2; ++j) {
        dst[2 * j] += 0.5 * src[j];
        dst[2 * j + 1] += 0.5 * src[j];
      }
      if (T % 2) dst[T - 1] += src[To - 1];
    }
  });
}

Var upsample_linear(Var x) {
  const Tensor& xv = x.value();
  require_sequence(xv, "upsample_linear");
  const std::size_t C = xv.extent(0);
  const std::size_t T = xv.extent(1);
  Tensor out({C, 2 * T});
  for (std::size_t c = 0; c < C; ++c) {
    auto src = xv.row(c);
    auto dst = out.row(c);
    for (std::size_t t = 0; t + 1 < T; ++t) {
      dst[2 * t] = src[t];
      dst[2 * t + 1] = 0.5 * (src[t] + src[t + 1]);
    }
    dst[2 * T - 2] = src[T - 1];
    dst[2 * T - 1] = src[T - 1];
  }
  const auto ix = x.id();
  return x.tape().record(OpKind::upsample, std::move(out), {ix}, [=](const Tensor& g, GradSink& s) {
    Tensor& gx = s.grad(ix);
    for (std::size_t c = 0; c < C; ++c) {
      auto src = g.row(c);
      auto dst = gx.row(c);
      for (std::size_t t = 0; t + 1 < T; ++t) {
        dst[t] += src[2 * t] + 0.5 * src[2 * t + 1];
        dst[t + 1] += 0.5 * src[2 * t + 1];
      }
      dst[T - 1] += src[2 * T - 2] + src[2 * T - 1];
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  require_sequence(xv, "layer_norm");
  const std::size_t C = xv.extent(0);
  const std::size_t T = xv.extent(1);
  if (gamma.value().size() != C || beta.value().size() != C) {
    throw Error(ErrorCode::shape_mismatch, "layer_norm parameters do not match " + std::to_string(C) + " channels");
  }
  const double inv_c = 1.0 / static_cast<double>(C);
  std::vector<double> mu(T, 0.0), inv(T, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    auto r = xv.row(c);
    for (std::size_t t = 0; t < T; ++t) mu[t] += r[t];
  }
  for (double& m : mu) m *= inv_c;
  for (std::size_t c = 0; c < C; ++c) {
    auto r = xv.row(c);
    for (std::size_t t = 0; t < T; ++t) {
      const double d = r[t] - mu[t];
      inv[t] += d * d;
    }
  }
  for (double& v : inv) v = 1.0 / std::sqrt(v * inv_c + eps);

  Tensor xhat({C, T});
  Tensor out({C, T});
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t c = 0; c < C; ++c) {
    auto r = xv.row(c);
    auto h = xhat.row(c);
    auto o = out.row(c);
    for (std::size_t t = 0; t < T; ++t) {
      h[t] = (r[t] - mu[t]) * inv[t];
      o[t] = gv[c] * h[t] + bv[c];
    }
  }

  const auto ix = x.id();
  const auto ig = gamma.id();
  const auto ib = beta.id();
  return x.tape().record(
      OpKind::layer_norm, std::move(out), {ix, ig, ib},
      [=, xhat = std::move(xhat), inv = std::move(inv)](const Tensor& g, GradSink& s) {
        const Tensor& gam = s.value(ig);
        Tensor& gg = s.grad(ig);
        Tensor& gb = s.grad(ib);
        Tensor& gx = s.grad(ix);
        std::vector<double> m1(T, 0.0), m2(T, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
          auto gr = g.row(c);
          auto h = xhat.row(c);
          double sg = 0.0, sgh = 0.0;
          for (std::size_t t = 0; t < T; ++t) {
            sg += gr[t];
            sgh += gr[t] * h[t];
            const double dh = gr[t] * gam[c];
            m1[t] += dh;
            m2[t] += dh * h[t];
          }
          gg[c] += sgh;
          gb[c] += sg;
        }
        for (std::size_t c = 0; c < C; ++c) {
          auto gr = g.row(c);
          auto h = xhat.row(c);
          auto dx = gx.row(c);
          for (std::size_t t = 0; t < T; ++t) {
            const double dh = gr[t] * gam[c];
            dx[t] += inv[t] * (dh - m1[t] * inv_c - h[t] * m2[t] * inv_c);
          }
        }
      });
}

Var dropout(Var x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::invalid_argument, "dropout rate must be in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  const Tensor& xv = x.value();
  std::vector<double> mask(xv.size());
  Tensor out = xv;
  auto od = out.data();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = uniform01(rng) < rate ? 0.0 : keep_scale;
    od[i] *= mask[i];
  }
  const auto ix = x.id();
  return x.tape().record(OpKind::dropout, std::move(out), {ix},
                         [=, mask = std::move(mask)](const Tensor& g, GradSink& s) {
                           auto d = s.grad(ix).data();
                           auto gd = g.data();
                           for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * mask[i];
                         });
}

Var conv1d_forward(ForwardContext& ctx, Var x, const Conv1dLayer& layer) {
  return conv1d(x, ctx.param(layer.weight), ctx.param(layer.bias), layer.dilation);
}

Var inception_forward(ForwardContext& ctx, Var x, const InceptionBlock& block) {
  if (block.branches.size() == 1) return conv1d_forward(ctx, x, block.branches.front());
  std::vector<Var> outs;
  outs.reserve(block.branches.size());
  for (const auto& branch : block.branches) outs.push_back(conv1d_forward(ctx, x, branch));
  return ad::concat(outs, 0);
}

Var layer_norm_forward(ForwardContext& ctx, Var x, const LayerNorm& ln) {
  return layer_norm(x, ctx.param(ln.gamma), ctx.param(ln.beta), ln.eps);
}

Var dropout_forward(ForwardContext& ctx, Var x, const Dropout& d) {
  if (!ctx.dropout_active() || d.rate == 0.0) return x;
  return dropout(x, d.rate, ctx.rng());
}

}  // namespace seqmark::nn
