// sepdet/detector.hpp

// Copyright 2026 the sepdet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end raw-waveform detector: learnable sinc band-pass bank, residual
// blocks with filter-wise feature-map scaling, GRU aggregation and a
// two-class head. One architecture serves the full-signal, speech and noise
// detectors; only the input signal differs.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sepdet/errors.hpp"
#include "sepdet/nn.hpp"
#include "sepdet/rng.hpp"

namespace sepdet {

enum class ComponentKind { kFull, kSpeech, kNoise };

inline const char* to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::kFull: return "full";
    case ComponentKind::kSpeech: return "speech";
    case ComponentKind::kNoise: return "noise";
  }
  return "full";
}

inline ComponentKind component_kind_from_string(const std::string& s) {
  if (s == "full" || s == "x") return ComponentKind::kFull;
  if (s == "speech" || s == "s") return ComponentKind::kSpeech;
  if (s == "noise" || s == "n") return ComponentKind::kNoise;
  throw ConfigError("unknown component kind: " + s);
}

struct SincLayerConfig {
  int num_filters = 20;
  int kernel_len = 129;  // odd
  double min_low_hz = 0.0;
  double min_band_hz = 50.0;
  bool learnable = true;
};

struct DetectorConfig {
  SincLayerConfig sinc;
  std::vector<std::pair<int, int>> res_blocks = {{20, 2}, {128, 4}};  // (channels, count)
  int gru_hidden = 1024;
  int gru_layers = 1;
  int fc_hidden = 1024;
  int num_classes = 2;
  int input_len = 32000;
  int sample_rate = 16000;
  double leaky_slope = 0.3;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  int pool_size = 3;

  int total_blocks() const {
    int n = 0;
    for (const auto& [ch, count] : res_blocks) n += count;
    return n;
  }

  void validate() const {
    if (sinc.num_filters < 1) throw ConfigError("detector: need >= 1 sinc filter");
    if (sinc.kernel_len < 3 || sinc.kernel_len % 2 == 0)
      throw ConfigError("detector: sinc kernel_len must be odd and >= 3");
    if (sinc.min_low_hz < 0) throw ConfigError("detector: min_low_hz must be >= 0");
    if (sinc.min_band_hz <= 0) throw ConfigError("detector: min_band_hz must be > 0");
    if (num_classes != 2) throw ConfigError("detector: num_classes must be 2");
    if (input_len <= sinc.kernel_len)
      throw ConfigError("detector: input_len must exceed sinc kernel_len");
    if (res_blocks.empty()) throw ConfigError("detector: need at least one block stage");
    for (const auto& [ch, count] : res_blocks)
      if (ch < 1 || count < 1) throw ConfigError("detector: bad block stage");
    if (gru_hidden < 1 || gru_layers < 1 || fc_hidden < 1)
      throw ConfigError("detector: bad head sizes");
    // Every pooling stage must leave at least one frame.
    int t = (input_len - sinc.kernel_len + 1) / pool_size;
    for (int b = 0; b < total_blocks(); ++b) t /= pool_size;
    if (t < 1) throw ConfigError("detector: input_len too short for the pooling chain");
  }
};

// Time-domain band-pass from the difference of two windowed sinc low-passes.
// Symmetric about the center tap; zero DC gain when f1 > 0.
inline std::vector<double> sinc_kernel(double f1_hz, double f2_hz, int kernel_len,
                                       double sample_rate) {
  if (!(f1_hz >= 0.0) || !(f1_hz < f2_hz) || !(f2_hz <= sample_rate / 2.0))
    throw ConfigError("sinc_kernel: invalid band [" + std::to_string(f1_hz) + ", " +
                      std::to_string(f2_hz) + "]");
  if (kernel_len < 1 || kernel_len % 2 == 0)
    throw ConfigError("sinc_kernel: kernel_len must be odd");
  std::vector<double> g(static_cast<std::size_t>(kernel_len));
  const int half = kernel_len / 2;
  for (int k = 0; k < kernel_len; ++k) {
    const double m = static_cast<double>(k - half);
    const double hamming =
        0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(k) /
                               static_cast<double>(kernel_len - 1));
    auto lp = [&](double f) {
      const double a = 2.0 * M_PI * f * m / sample_rate;
      const double s = std::abs(a) < 1e-12 ? 1.0 : std::sin(a) / a;
      return 2.0 * f / sample_rate * s;
    };
    g[static_cast<std::size_t>(k)] = (lp(f2_hz) - lp(f1_hz)) * hamming;
  }
  return g;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace nnml = ::sepdet::nn;

template <typename Real>
class DetectorNet {
 public:
  DetectorNet() = default;

  explicit DetectorNet(const DetectorConfig& cfg) { build(cfg); }

  void build(const DetectorConfig& cfg) {
    cfg.validate();
    cfg_ = cfg;
    params_ = {};
    buffers_ = {};
    const int F = cfg.sinc.num_filters;
    sinc_low_ = params_.alloc("sinc.low_hz", {F});
    sinc_band_ = params_.alloc("sinc.band_hz", {F});
    front_bn_.init(params_, buffers_, "front_bn", F, cfg.bn_momentum, cfg.bn_eps);
    int cin = F;
    blocks_.clear();
    int index = 0;
    for (const auto& [ch, count] : cfg.res_blocks) {
      for (int i = 0; i < count; ++i, ++index) {
        Block b;
        b.cin = cin;
        b.cout = ch;
        const std::string name = "block" + std::to_string(index);
        b.bn_a.init(params_, buffers_, name + ".bn_a", cin, cfg.bn_momentum, cfg.bn_eps);
        b.conv1.init(params_, name + ".conv1", cin, ch, 3);
        b.bn_b.init(params_, buffers_, name + ".bn_b", ch, cfg.bn_momentum, cfg.bn_eps);
        b.conv2.init(params_, name + ".conv2", ch, ch, 3);
        b.proj = cin != ch;
        if (b.proj) b.skip.init(params_, name + ".skip", cin, ch, 1);
        b.fms.init(params_, name + ".fms", ch, ch);
        blocks_.push_back(b);
        cin = ch;
      }
    }
    pre_gru_bn_.init(params_, buffers_, "pre_gru_bn", cin, cfg.bn_momentum, cfg.bn_eps);
    grus_.clear();
    int gin = cin;
    for (int l = 0; l < cfg.gru_layers; ++l) {
      nnml::Gru<Real> g;
      g.init(params_, "gru" + std::to_string(l), gin, cfg.gru_hidden);
      grus_.push_back(g);
      gin = cfg.gru_hidden;
    }
    fc1_.init(params_, "fc1", cfg.gru_hidden, cfg.fc_hidden);
    fc2_.init(params_, "fc2", cfg.fc_hidden, cfg.num_classes);
  }

  // Mel-spaced sinc cutoffs; fan-in-scaled uniform weights; zero biases.
  void init_params(Rng& rng) {
    const int F = cfg_.sinc.num_filters;
    const double lo_mel = hz_to_mel(cfg_.sinc.min_low_hz);
    const double hi_mel = hz_to_mel(cfg_.sample_rate / 2.0);
    for (int f = 0; f < F; ++f) {
      const double m1 = lo_mel + (hi_mel - lo_mel) * f / F;
      const double m2 = lo_mel + (hi_mel - lo_mel) * (f + 1) / F;
      const double f1 = mel_to_hz(m1);
      const double f2 = mel_to_hz(m2);
      params_.data[sinc_low_ + f] = static_cast<Real>(f1 - cfg_.sinc.min_low_hz);
      params_.data[sinc_band_ + f] =
          static_cast<Real>(std::max(0.0, f2 - f1 - cfg_.sinc.min_band_hz));
    }
    for (const auto& e : params_.entries) {
      if (e.name.rfind("sinc.", 0) == 0) continue;
      if (e.name.find(".gamma") != std::string::npos ||
          e.name.find(".beta") != std::string::npos ||
          e.name.find(".bias") != std::string::npos ||
          e.name.find(".b_ih") != std::string::npos ||
          e.name.find(".b_hh") != std::string::npos) {
        continue;  // gamma already 1, the rest stay 0
      }
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < e.shape.size(); ++d)
        fan_in *= static_cast<std::size_t>(e.shape[d]);
      const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (std::size_t i = 0; i < e.count; ++i)
        params_.data[e.offset + i] = static_cast<Real>(rng.uniform(-a, a));
    }
  }

  const DetectorConfig& config() const { return cfg_; }
  nnml::ParamStore<Real>& params() { return params_; }
  const nnml::ParamStore<Real>& params() const { return params_; }
  nnml::ParamStore<Real>& buffers() { return buffers_; }
  const nnml::ParamStore<Real>& buffers() const { return buffers_; }

  void set_jobs(int jobs) { jobs_ = std::max(1, jobs); }
  int jobs() const { return jobs_; }

  // Effective band edges after the clamping reparameterization:
  // f1 in [0, fs/2 - min_band], f2 in [f1 + min_band, fs/2].
  std::pair<double, double> band(int f) const {
    const double fs2 = cfg_.sample_rate / 2.0;
    const double lo_raw =
        cfg_.sinc.min_low_hz + std::abs(static_cast<double>(params_.data[sinc_low_ + f]));
    const double f1 = std::min(lo_raw, fs2 - cfg_.sinc.min_band_hz);
    const double hi_raw =
        f1 + cfg_.sinc.min_band_hz + std::abs(static_cast<double>(params_.data[sinc_band_ + f]));
    const double f2 = std::min(hi_raw, fs2);
    return {f1, f2};
  }

  struct Cache {
    nnml::Mat<Real> kernels;  // F x K
    nnml::Batch<Real> sinc_abs;
    std::vector<std::vector<std::int8_t>> sinc_sign;
    nnml::Batch<Real> front_pool;
    typename nnml::BatchNorm<Real>::Cache front_bn;
    nnml::Batch<Real> front_act;
    struct BlockCache {
      nnml::Batch<Real> t1, t2, t3, t5, t6, out;
      typename nnml::BatchNorm<Real>::Cache bn_a, bn_b;
      nnml::Mat<Real> fms_avg, fms_s;
    };
    std::vector<BlockCache> blocks;
    typename nnml::BatchNorm<Real>::Cache pre_gru_bn;
    nnml::Batch<Real> pre_gru;
    std::vector<std::vector<typename nnml::Gru<Real>::Cache>> gru;  // [layer][sample]
    nnml::Mat<Real> last_h;
    nnml::Mat<Real> fc1_out;
  };

  // Training-mode forward. input: B x input_len raw waveforms.
  void forward_train(const nnml::Mat<Real>& input, nnml::Mat<Real>& logits, Cache& cache) {
    run_forward(input, logits, &cache, /*train=*/true);
  }

  // Inference-mode forward (running BN statistics; pure per sample).
  void forward_eval(const nnml::Mat<Real>& input, nnml::Mat<Real>& logits) const {
    Cache scratch;
    const_cast<DetectorNet*>(this)->run_forward(input, logits, &scratch, /*train=*/false);
  }

  // Backward from dlogits. Parameter gradients are accumulated into `grads`
  // (same layout as params().data). Optional input gradient.
  void backward(const nnml::Mat<Real>& input, const Cache& cache,
                const nnml::Mat<Real>& dlogits, std::vector<Real>& grads,
                nnml::Mat<Real>* dinput = nullptr) const {
    const std::size_t B = static_cast<std::size_t>(input.rows);
    if (dinput != nullptr) dinput->resize(input.rows, input.cols);
    // Head.
    nnml::Mat<Real> g_fc1, g_last;
    fc2_.backward(params_, cache.fc1_out, dlogits, &g_fc1, grads);
    nnml::leaky_relu_backward_inplace(cache.fc1_out, g_fc1, static_cast<Real>(cfg_.leaky_slope));
    fc1_.backward(params_, cache.last_h, g_fc1, &g_last, grads);

    // GRU stack (per-sample; gradient reductions done in index order below).
    nnml::Batch<Real> g_seq(B);
    const int H = cfg_.gru_hidden;
    for (std::size_t s = 0; s < B; ++s) {
      const int T = cache.gru.back()[s].h.rows;
      g_seq[s].resize(T, H);
      for (int j = 0; j < H; ++j) g_seq[s].at(T - 1, j) = g_last.at(static_cast<int>(s), j);
    }
    nnml::Batch<Real> g_prev(B);
    for (int l = static_cast<int>(grus_.size()) - 1; l >= 0; --l) {
      const nnml::Batch<Real>* in_seq;
      nnml::Batch<Real> upper_in;
      if (l == 0) {
        in_seq = &cache.pre_gru;
      } else {
        upper_in = batch_of_h(cache.gru[static_cast<std::size_t>(l - 1)]);
        in_seq = &upper_in;
      }
      per_sample_grad_reduce(B, grads, [&](std::size_t s, std::vector<Real>& g) {
        grus_[static_cast<std::size_t>(l)].backward(
            params_, (*in_seq)[s], cache.gru[static_cast<std::size_t>(l)][s], g_seq[s],
            &g_prev[s], g);
      });
      g_seq.swap(g_prev);
    }

    // Pre-GRU BN + LReLU.
    for (std::size_t s = 0; s < B; ++s)
      nnml::leaky_relu_backward_inplace(cache.pre_gru[s], g_seq[s],
                                        static_cast<Real>(cfg_.leaky_slope));
    nnml::Batch<Real> g_blocks_out;
    pre_gru_bn_.backward(params_, cache.blocks.back().out, g_seq, cache.pre_gru_bn,
                         g_blocks_out, grads, jobs_);

    // Residual blocks in reverse.
    for (int bi = static_cast<int>(blocks_.size()) - 1; bi >= 0; --bi) {
      const Block& blk = blocks_[static_cast<std::size_t>(bi)];
      const auto& bc = cache.blocks[static_cast<std::size_t>(bi)];
      const nnml::Batch<Real>& block_in =
          bi == 0 ? cache.front_act : cache.blocks[static_cast<std::size_t>(bi - 1)].out;
      nnml::Batch<Real> g_in;
      backward_block(blk, bc, block_in, g_blocks_out, g_in, grads);
      g_blocks_out.swap(g_in);
    }

    // Front end: LReLU -> BN -> pool -> |.| -> sinc conv.
    for (std::size_t s = 0; s < B; ++s)
      nnml::leaky_relu_backward_inplace(cache.front_act[s], g_blocks_out[s],
                                        static_cast<Real>(cfg_.leaky_slope));
    nnml::Batch<Real> g_pool;
    front_bn_.backward(params_, cache.front_pool, g_blocks_out, cache.front_bn, g_pool,
                       grads, jobs_);
    const int F = cfg_.sinc.num_filters;
    const int K = cfg_.sinc.kernel_len;
    nnml::Batch<Real> g_conv(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      nnml::maxpool_backward(cache.sinc_abs[s], cfg_.pool_size, g_pool[s], g_conv[s]);
      const auto& sign = cache.sinc_sign[s];
      for (std::size_t i = 0; i < g_conv[s].v.size(); ++i)
        g_conv[s].v[i] *= static_cast<Real>(sign[i]);
    });

    // dL/dkernel, reduced over batch in index order.
    nnml::Mat<Real> g_ker(F, K);
    std::vector<nnml::Mat<Real>> part(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      part[s].resize(F, K);
      const int T = g_conv[s].rows;
      // Transpose grad to filter-major for contiguous dots.
      nnml::Mat<Real> gt(F, T);
      for (int t = 0; t < T; ++t) {
        const Real* gr = g_conv[s].row(t);
        for (int f = 0; f < F; ++f) gt.at(f, t) = gr[f];
      }
      const Real* x = input.row(static_cast<int>(s));
      for (int f = 0; f < F; ++f) {
        const Real* gf = gt.row(f);
        for (int k = 0; k < K; ++k) {
          Real acc = 0;
          const Real* xk = x + k;
          for (int t = 0; t < T; ++t) acc += gf[t] * xk[t];
          part[s].at(f, k) += acc;
        }
      }
      if (dinput != nullptr) {
        Real* gx = dinput->row(static_cast<int>(s));
        for (int t = 0; t < T; ++t) {
          const Real* gr = g_conv[s].row(t);
          for (int f = 0; f < F; ++f) {
            const Real g = gr[f];
            const Real* ker = cache.kernels.row(f);
            for (int k = 0; k < K; ++k) gx[t + k] += g * ker[k];
          }
        }
      }
    });
    for (std::size_t s = 0; s < B; ++s)
      for (std::size_t i = 0; i < g_ker.v.size(); ++i) g_ker.v[i] += part[s].v[i];

    if (cfg_.sinc.learnable) accumulate_sinc_grads(g_ker, grads);
  }

 private:
  struct Block {
    nnml::BatchNorm<Real> bn_a, bn_b;
    nnml::Conv1d<Real> conv1, conv2, skip;
    nnml::Linear<Real> fms;
    bool proj = false;
    int cin = 0, cout = 0;
  };

  static nnml::Batch<Real> batch_of_h(const std::vector<typename nnml::Gru<Real>::Cache>& c) {
    nnml::Batch<Real> b(c.size());
    for (std::size_t s = 0; s < c.size(); ++s) b[s] = c[s].h;
    return b;
  }

  // Runs fn per sample in parallel with per-thread gradient buffers, then
  // reduces them into `grads` in chunk order. Chunking depends only on
  // (n, jobs), so results are reproducible for a fixed jobs value.
  template <typename Fn>
  void per_sample_grad_reduce(std::size_t n, std::vector<Real>& grads, const Fn& fn) const {
    const int workers = std::max(1, std::min<int>(jobs_, static_cast<int>(n)));
    if (workers == 1) {
      for (std::size_t s = 0; s < n; ++s) fn(s, grads);
      return;
    }
    const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / workers;
    std::vector<std::vector<Real>> partial(static_cast<std::size_t>(workers));
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      const std::size_t lo = static_cast<std::size_t>(w) * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      threads.emplace_back([&, w, lo, hi] {
        auto& g = partial[static_cast<std::size_t>(w)];
        g.assign(grads.size(), Real(0));
        for (std::size_t s = lo; s < hi; ++s) fn(s, g);
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& g : partial)
      for (std::size_t i = 0; i < g.size(); ++i) grads[i] += g[i];
  }

  void build_kernels(nnml::Mat<Real>& kernels) const {
    const int F = cfg_.sinc.num_filters;
    const int K = cfg_.sinc.kernel_len;
    kernels.resize(F, K);
    for (int f = 0; f < F; ++f) {
      const auto [f1, f2] = band(f);
      const auto k = sinc_kernel(f1, f2, K, cfg_.sample_rate);
      for (int i = 0; i < K; ++i) kernels.at(f, i) = static_cast<Real>(k[static_cast<std::size_t>(i)]);
    }
  }

  void run_forward(const nnml::Mat<Real>& input, nnml::Mat<Real>& logits, Cache* cache,
                   bool train) {
    if (input.cols != cfg_.input_len)
      throw ConfigError("forward: expected " + std::to_string(cfg_.input_len) +
                        " samples per row, got " + std::to_string(input.cols));
    for (const Real v : input.v)
      if (!std::isfinite(static_cast<double>(v))) throw Error("forward: non-finite input");
    const std::size_t B = static_cast<std::size_t>(input.rows);
    const int F = cfg_.sinc.num_filters;
    const int K = cfg_.sinc.kernel_len;
    const int T1 = cfg_.input_len - K + 1;

    build_kernels(cache->kernels);
    cache->sinc_abs.resize(B);
    cache->sinc_sign.assign(B, {});
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      auto& out = cache->sinc_abs[s];
      out.resize(T1, F);
      auto& sign = cache->sinc_sign[s];
      sign.assign(static_cast<std::size_t>(T1) * F, 0);
      const Real* x = input.row(static_cast<int>(s));
      for (int f = 0; f < F; ++f) {
        const Real* ker = cache->kernels.row(f);
        for (int t = 0; t < T1; ++t) {
          Real acc = 0;
          const Real* xt = x + t;
          for (int k = 0; k < K; ++k) acc += xt[k] * ker[k];
          const std::size_t idx = static_cast<std::size_t>(t) * F + f;
          sign[idx] = acc > Real(0) ? 1 : (acc < Real(0) ? -1 : 0);
          out.v[idx] = std::abs(acc);
        }
      }
    });

    cache->front_pool.resize(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      nnml::maxpool_forward(cache->sinc_abs[s], cfg_.pool_size, cache->front_pool[s]);
    });
    if (train)
      front_bn_.forward_train(params_, buffers_, cache->front_pool, cache->front_act,
                              cache->front_bn, jobs_);
    else
      front_bn_.forward_eval(params_, buffers_, cache->front_pool, cache->front_act, jobs_);
    for (auto& m : cache->front_act)
      nnml::leaky_relu_inplace(m, static_cast<Real>(cfg_.leaky_slope));

    cache->blocks.resize(blocks_.size());
    const nnml::Batch<Real>* cur = &cache->front_act;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      forward_block(blocks_[bi], *cur, cache->blocks[bi], train);
      cur = &cache->blocks[bi].out;
    }

    if (train)
      pre_gru_bn_.forward_train(params_, buffers_, *cur, cache->pre_gru, cache->pre_gru_bn,
                                jobs_);
    else
      pre_gru_bn_.forward_eval(params_, buffers_, *cur, cache->pre_gru, jobs_);
    for (auto& m : cache->pre_gru)
      nnml::leaky_relu_inplace(m, static_cast<Real>(cfg_.leaky_slope));

    cache->gru.assign(grus_.size(), std::vector<typename nnml::Gru<Real>::Cache>(B));
    const int H = cfg_.gru_hidden;
    nnml::Batch<Real> seq_store;
    const nnml::Batch<Real>* seq = &cache->pre_gru;
    for (std::size_t l = 0; l < grus_.size(); ++l) {
      nnml::Batch<Real> next(B);
      nnml::parallel_for(B, jobs_, [&](std::size_t s) {
        grus_[l].forward(params_, (*seq)[s], next[s], &cache->gru[l][s]);
      });
      seq_store = std::move(next);
      seq = &seq_store;
    }
    cache->last_h.resize(static_cast<int>(B), H);
    for (std::size_t s = 0; s < B; ++s) {
      const auto& h = cache->gru.back()[s].h;
      for (int j = 0; j < H; ++j) cache->last_h.at(static_cast<int>(s), j) = h.at(h.rows - 1, j);
    }

    fc1_.forward(params_, cache->last_h, cache->fc1_out);
    nnml::leaky_relu_inplace(cache->fc1_out, static_cast<Real>(cfg_.leaky_slope));
    fc2_.forward(params_, cache->fc1_out, logits);
  }

  void forward_block(const Block& blk, const nnml::Batch<Real>& in,
                     typename Cache::BlockCache& bc, bool train) {
    const std::size_t B = in.size();
    if (train)
      blk.bn_a.forward_train(params_, buffers_, in, bc.t1, bc.bn_a, jobs_);
    else
      blk.bn_a.forward_eval(params_, buffers_, in, bc.t1, jobs_);
    for (auto& m : bc.t1) nnml::leaky_relu_inplace(m, static_cast<Real>(cfg_.leaky_slope));
    bc.t2.resize(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      blk.conv1.forward(params_, bc.t1[s], bc.t2[s]);
    });
    if (train)
      blk.bn_b.forward_train(params_, buffers_, bc.t2, bc.t3, bc.bn_b, jobs_);
    else
      blk.bn_b.forward_eval(params_, buffers_, bc.t2, bc.t3, jobs_);
    for (auto& m : bc.t3) nnml::leaky_relu_inplace(m, static_cast<Real>(cfg_.leaky_slope));
    bc.t5.resize(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      blk.conv2.forward(params_, bc.t3[s], bc.t5[s]);
      if (blk.proj) {
        nnml::Mat<Real> sk;
        blk.skip.forward(params_, in[s], sk);
        for (std::size_t i = 0; i < bc.t5[s].v.size(); ++i) bc.t5[s].v[i] += sk.v[i];
      } else {
        for (std::size_t i = 0; i < bc.t5[s].v.size(); ++i) bc.t5[s].v[i] += in[s].v[i];
      }
    });
    bc.t6.resize(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      nnml::maxpool_forward(bc.t5[s], cfg_.pool_size, bc.t6[s]);
    });
    // Filter-wise feature-map scaling: y = y * s + s with s = sigmoid(W avg + b).
    const int C = blk.cout;
    bc.fms_avg.resize(static_cast<int>(B), C);
    for (std::size_t s = 0; s < B; ++s) {
      const auto& m = bc.t6[s];
      for (int t = 0; t < m.rows; ++t) {
        const Real* row = m.row(t);
        for (int c = 0; c < C; ++c) bc.fms_avg.at(static_cast<int>(s), c) += row[c];
      }
      const Real inv = m.rows > 0 ? Real(1) / static_cast<Real>(m.rows) : Real(0);
      for (int c = 0; c < C; ++c) bc.fms_avg.at(static_cast<int>(s), c) *= inv;
    }
    nnml::Mat<Real> z;
    blk.fms.forward(params_, bc.fms_avg, z);
    bc.fms_s.resize(z.rows, z.cols);
    for (std::size_t i = 0; i < z.v.size(); ++i)
      bc.fms_s.v[i] = Real(1) / (Real(1) + std::exp(-z.v[i]));
    bc.out.resize(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      const auto& m = bc.t6[s];
      auto& o = bc.out[s];
      o.resize(m.rows, C);
      const Real* sv = bc.fms_s.row(static_cast<int>(s));
      for (int t = 0; t < m.rows; ++t) {
        const Real* mi = m.row(t);
        Real* oo = o.row(t);
        for (int c = 0; c < C; ++c) oo[c] = mi[c] * sv[c] + sv[c];
      }
    });
  }

  void backward_block(const Block& blk, const typename Cache::BlockCache& bc,
                      const nnml::Batch<Real>& block_in, const nnml::Batch<Real>& g_out,
                      nnml::Batch<Real>& g_in, std::vector<Real>& grads) const {
    const std::size_t B = block_in.size();
    const int C = blk.cout;
    // FMS backward.
    nnml::Mat<Real> ds(static_cast<int>(B), C);
    nnml::Batch<Real> g_t6(B);
    for (std::size_t s = 0; s < B; ++s) {
      const auto& m = bc.t6[s];
      for (int t = 0; t < m.rows; ++t) {
        const Real* gr = g_out[s].row(t);
        const Real* mi = m.row(t);
        for (int c = 0; c < C; ++c)
          ds.at(static_cast<int>(s), c) += gr[c] * (mi[c] + Real(1));
      }
    }
    nnml::Mat<Real> gz(static_cast<int>(B), C);
    for (std::size_t i = 0; i < gz.v.size(); ++i) {
      const Real sv = bc.fms_s.v[i];
      gz.v[i] = ds.v[i] * sv * (Real(1) - sv);
    }
    nnml::Mat<Real> g_avg;
    blk.fms.backward(params_, bc.fms_avg, gz, &g_avg, grads);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      const auto& m = bc.t6[s];
      auto& g = g_t6[s];
      g.resize(m.rows, C);
      const Real inv = m.rows > 0 ? Real(1) / static_cast<Real>(m.rows) : Real(0);
      const Real* sv = bc.fms_s.row(static_cast<int>(s));
      const Real* ga = g_avg.row(static_cast<int>(s));
      for (int t = 0; t < m.rows; ++t) {
        const Real* gr = g_out[s].row(t);
        Real* go = g.row(t);
        for (int c = 0; c < C; ++c) go[c] = gr[c] * sv[c] + ga[c] * inv;
      }
    });
    // Pool backward into the pre-pool tensor.
    nnml::Batch<Real> g_t5(B);
    nnml::parallel_for(B, jobs_, [&](std::size_t s) {
      nnml::maxpool_backward(bc.t5[s], cfg_.pool_size, g_t6[s], g_t5[s]);
    });
    // Skip path.
    g_in.resize(B);
    if (blk.proj) {
      per_sample_grad_reduce(B, grads, [&](std::size_t s, std::vector<Real>& g) {
        blk.skip.backward(params_, block_in[s], g_t5[s], &g_in[s], g);
      });
    } else {
      for (std::size_t s = 0; s < B; ++s) g_in[s] = g_t5[s];
    }
    // Main path: conv2 -> lrelu/bn_b -> conv1 -> lrelu/bn_a.
    nnml::Batch<Real> g_t3(B);
    per_sample_grad_reduce(B, grads, [&](std::size_t s, std::vector<Real>& g) {
      blk.conv2.backward(params_, bc.t3[s], g_t5[s], &g_t3[s], g);
    });
    for (std::size_t s = 0; s < B; ++s)
      nnml::leaky_relu_backward_inplace(bc.t3[s], g_t3[s], static_cast<Real>(cfg_.leaky_slope));
    nnml::Batch<Real> g_t2;
    blk.bn_b.backward(params_, bc.t2, g_t3, bc.bn_b, g_t2, grads, jobs_);
    nnml::Batch<Real> g_t1(B);
    per_sample_grad_reduce(B, grads, [&](std::size_t s, std::vector<Real>& g) {
      blk.conv1.backward(params_, bc.t1[s], g_t2[s], &g_t1[s], g);
    });
    for (std::size_t s = 0; s < B; ++s)
      nnml::leaky_relu_backward_inplace(bc.t1[s], g_t1[s], static_cast<Real>(cfg_.leaky_slope));
    nnml::Batch<Real> g_main;
    blk.bn_a.backward(params_, block_in, g_t1, bc.bn_a, g_main, grads, jobs_);
    for (std::size_t s = 0; s < B; ++s)
      for (std::size_t i = 0; i < g_in[s].v.size(); ++i) g_in[s].v[i] += g_main[s].v[i];
  }

  // Chain dL/dkernel into the cutoff parameters through the band
  // reparameterization and the windowed-sinc construction.
  void accumulate_sinc_grads(const nnml::Mat<Real>& g_ker, std::vector<Real>& grads) const {
    const int F = cfg_.sinc.num_filters;
    const int K = cfg_.sinc.kernel_len;
    const int half = K / 2;
    const double fs = cfg_.sample_rate;
    const double fs2 = fs / 2.0;
    for (int f = 0; f < F; ++f) {
      const double theta_l = static_cast<double>(params_.data[sinc_low_ + f]);
      const double theta_b = static_cast<double>(params_.data[sinc_band_ + f]);
      const double lo_raw = cfg_.sinc.min_low_hz + std::abs(theta_l);
      const bool lo_clamped = lo_raw > fs2 - cfg_.sinc.min_band_hz;
      const double f1 = lo_clamped ? fs2 - cfg_.sinc.min_band_hz : lo_raw;
      const double hi_raw = f1 + cfg_.sinc.min_band_hz + std::abs(theta_b);
      const bool hi_clamped = hi_raw > fs2;
      const double f2 = hi_clamped ? fs2 : hi_raw;
      double d_f1 = 0.0, d_f2 = 0.0;
      for (int k = 0; k < K; ++k) {
        const double m = static_cast<double>(k - half);
        const double hamming =
            0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(k) /
                                   static_cast<double>(K - 1));
        const double g = static_cast<double>(g_ker.at(f, k)) * hamming;
        d_f2 += g * (2.0 / fs) * std::cos(2.0 * M_PI * f2 * m / fs);
        d_f1 -= g * (2.0 / fs) * std::cos(2.0 * M_PI * f1 * m / fs);
      }
      const double sign_l = theta_l > 0 ? 1.0 : (theta_l < 0 ? -1.0 : 0.0);
      const double sign_b = theta_b > 0 ? 1.0 : (theta_b < 0 ? -1.0 : 0.0);
      const double d_f2_eff = hi_clamped ? 0.0 : d_f2;
      // f2 depends on f1 when unclamped; f1 depends on theta_l when unclamped.
      const double d_theta_l = lo_clamped ? 0.0 : (d_f1 + d_f2_eff) * sign_l;
      const double d_theta_b = d_f2_eff * sign_b;
      grads[sinc_low_ + f] += static_cast<Real>(d_theta_l);
      grads[sinc_band_ + f] += static_cast<Real>(d_theta_b);
    }
  }

  DetectorConfig cfg_;
  nnml::ParamStore<Real> params_;
  nnml::ParamStore<Real> buffers_;
  std::size_t sinc_low_ = 0, sinc_band_ = 0;
  nnml::BatchNorm<Real> front_bn_;
  std::vector<Block> blocks_;
  nnml::BatchNorm<Real> pre_gru_bn_;
  std::vector<nnml::Gru<Real>> grus_;
  nnml::Linear<Real> fc1_, fc2_;
  int jobs_ = 1;
};

// A detector model: network plus the signal view it is trained on.
template <typename Real>
struct BasicDetectorModel {
  DetectorConfig config;
  ComponentKind component_kind = ComponentKind::kFull;
  DetectorNet<Real> net;
};

using DetectorModel = BasicDetectorModel<float>;

template <typename Real>
BasicDetectorModel<Real> init_model_t(const DetectorConfig& cfg, ComponentKind kind,
                                      Rng& rng) {
  BasicDetectorModel<Real> m;
  m.config = cfg;
  m.component_kind = kind;
  m.net.build(cfg);
  m.net.init_params(rng);
  return m;
}

inline DetectorModel init_model(const DetectorConfig& cfg, ComponentKind kind, Rng& rng) {
  return init_model_t<float>(cfg, kind, rng);
}

// Inference-mode logits for a batch of raw windows.
template <typename Real>
nnml::Mat<Real> forward(const BasicDetectorModel<Real>& model, const nnml::Mat<Real>& batch) {
  nnml::Mat<Real> logits;
  model.net.forward_eval(batch, logits);
  for (const Real v : logits.v)
    if (!std::isfinite(static_cast<double>(v))) throw Error("forward: non-finite logits");
  return logits;
}

// Softmax probabilities; column 1 is P(Fake).
template <typename Real>
nnml::Mat<Real> predict_proba(const BasicDetectorModel<Real>& model,
                              const nnml::Mat<Real>& batch) {
  const auto logits = forward(model, batch);
  nnml::Mat<Real> probs;
  nnml::softmax_rows(logits, probs);
  return probs;
}

}  // namespace sepdet
