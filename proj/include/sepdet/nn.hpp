// sepdet/nn.hpp

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

// Small dependency-free neural-network kernel set with hand-written
// gradients. Everything is templated on the scalar type: float for training
// and inference, double for finite-difference verification.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sepdet/errors.hpp"

namespace sepdet::nn {

template <typename Real>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<Real> v;

  Mat() = default;
  Mat(int r, int c) { resize(r, c); }

  void resize(int r, int c) {
    rows = r;
    cols = c;
    v.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), Real(0));
  }
  Real* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const Real* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
  Real& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  Real at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
};

template <typename Real>
using Batch = std::vector<Mat<Real>>;

// Runs fn(i) for i in [0, n) across `jobs` threads in contiguous chunks.
// Chunk boundaries depend only on (n, jobs), so any cross-item reduction done
// chunk-by-chunk in index order is reproducible for a fixed jobs value.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

// ---------------------------------------------------------------------------
// Parameter storage: one flat array with named views, so the optimizer,
// serialization and finite differencing all see the same memory.
// ---------------------------------------------------------------------------

template <typename Real>
struct ParamStore {
  struct Entry {
    std::string name;
    std::size_t offset = 0;
    std::size_t count = 0;
    std::vector<int> shape;
  };

  std::vector<Real> data;
  std::vector<Entry> entries;

  std::size_t alloc(const std::string& name, std::vector<int> shape) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    Entry e{name, data.size(), count, std::move(shape)};
    data.resize(data.size() + count, Real(0));
    entries.push_back(e);
    return e.offset;
  }

  std::span<Real> view(std::size_t offset, std::size_t count) {
    return {data.data() + offset, count};
  }
  std::span<const Real> view(std::size_t offset, std::size_t count) const {
    return {data.data() + offset, count};
  }

  const Entry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Layers. Parameters live in an external ParamStore; layers keep offsets.
// Gradient buffers mirror the flat parameter array.
// ---------------------------------------------------------------------------

template <typename Real>
struct Linear {
  int in_dim = 0, out_dim = 0;
  std::size_t w = 0, b = 0;  // offsets: W[out][in], b[out]

  void init(ParamStore<Real>& ps, const std::string& name, int in, int out) {
    in_dim = in;
    out_dim = out;
    w = ps.alloc(name + ".weight", {out, in});
    b = ps.alloc(name + ".bias", {out});
  }

  // x: B x in -> y: B x out
  void forward(const ParamStore<Real>& ps, const Mat<Real>& x, Mat<Real>& y) const {
    const Real* W = ps.data.data() + w;
    const Real* B = ps.data.data() + b;
    y.resize(x.rows, out_dim);
    for (int r = 0; r < x.rows; ++r) {
      const Real* xi = x.row(r);
      Real* yo = y.row(r);
      for (int o = 0; o < out_dim; ++o) {
        const Real* wr = W + static_cast<std::size_t>(o) * in_dim;
        Real acc = B[o];
        for (int i = 0; i < in_dim; ++i) acc += wr[i] * xi[i];
        yo[o] = acc;
      }
    }
  }

  void backward(const ParamStore<Real>& ps, const Mat<Real>& x, const Mat<Real>& gy,
                Mat<Real>* gx, std::vector<Real>& grads) const {
    const Real* W = ps.data.data() + w;
    Real* gW = grads.data() + w;
    Real* gB = grads.data() + b;
    for (int r = 0; r < x.rows; ++r) {
      const Real* xi = x.row(r);
      const Real* gyo = gy.row(r);
      for (int o = 0; o < out_dim; ++o) {
        const Real g = gyo[o];
        gB[o] += g;
        Real* gwr = gW + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) gwr[i] += g * xi[i];
      }
    }
    if (gx != nullptr) {
      gx->resize(x.rows, in_dim);
      for (int r = 0; r < x.rows; ++r) {
        const Real* gyo = gy.row(r);
        Real* gxi = gx->row(r);
        for (int o = 0; o < out_dim; ++o) {
          const Real g = gyo[o];
          const Real* wr = W + static_cast<std::size_t>(o) * in_dim;
          for (int i = 0; i < in_dim; ++i) gxi[i] += g * wr[i];
        }
      }
    }
  }
};

// 1-D convolution over time with "same" padding, stride 1.
// Input T x Cin, output T x Cout, weight [Cout][K][Cin].
template <typename Real>
struct Conv1d {
  int in_ch = 0, out_ch = 0, kernel = 0;
  std::size_t w = 0, b = 0;

  void init(ParamStore<Real>& ps, const std::string& name, int cin, int cout, int k) {
    in_ch = cin;
    out_ch = cout;
    kernel = k;
    w = ps.alloc(name + ".weight", {cout, k, cin});
    b = ps.alloc(name + ".bias", {cout});
  }

  void forward(const ParamStore<Real>& ps, const Mat<Real>& x, Mat<Real>& y) const {
    const int T = x.rows;
    const int half = kernel / 2;
    const Real* W = ps.data.data() + w;
    const Real* B = ps.data.data() + b;
    y.resize(T, out_ch);
    for (int t = 0; t < T; ++t) {
      Real* yo = y.row(t);
      for (int o = 0; o < out_ch; ++o) yo[o] = B[o];
      for (int dk = 0; dk < kernel; ++dk) {
        const int src = t + dk - half;
        if (src < 0 || src >= T) continue;
        const Real* xi = x.row(src);
        for (int o = 0; o < out_ch; ++o) {
          const Real* wr = W + (static_cast<std::size_t>(o) * kernel + dk) * in_ch;
          Real acc = 0;
          for (int i = 0; i < in_ch; ++i) acc += wr[i] * xi[i];
          yo[o] += acc;
        }
      }
    }
  }

  void backward(const ParamStore<Real>& ps, const Mat<Real>& x, const Mat<Real>& gy,
                Mat<Real>* gx, std::vector<Real>& grads) const {
    const int T = x.rows;
    const int half = kernel / 2;
    const Real* W = ps.data.data() + w;
    Real* gW = grads.data() + w;
    Real* gB = grads.data() + b;
    for (int t = 0; t < T; ++t) {
      const Real* gyo = gy.row(t);
      for (int o = 0; o < out_ch; ++o) gB[o] += gyo[o];
      for (int dk = 0; dk < kernel; ++dk) {
        const int src = t + dk - half;
        if (src < 0 || src >= T) continue;
        const Real* xi = x.row(src);
        for (int o = 0; o < out_ch; ++o) {
          const Real g = gyo[o];
          Real* gwr = gW + (static_cast<std::size_t>(o) * kernel + dk) * in_ch;
          for (int i = 0; i < in_ch; ++i) gwr[i] += g * xi[i];
        }
      }
    }
    if (gx != nullptr) {
      gx->resize(T, in_ch);
      for (int t = 0; t < T; ++t) {
        const Real* gyo = gy.row(t);
        for (int dk = 0; dk < kernel; ++dk) {
          const int src = t + dk - half;
          if (src < 0 || src >= T) continue;
          Real* gxi = gx->row(src);
          for (int o = 0; o < out_ch; ++o) {
            const Real g = gyo[o];
            const Real* wr = W + (static_cast<std::size_t>(o) * kernel + dk) * in_ch;
            for (int i = 0; i < in_ch; ++i) gxi[i] += g * wr[i];
          }
        }
      }
    }
  }
};

// Max pooling over time, kernel == stride, remainder frames dropped.
template <typename Real>
inline void maxpool_forward(const Mat<Real>& x, int k, Mat<Real>& y) {
  const int T_out = x.rows / k;
  y.resize(T_out, x.cols);
  for (int t = 0; t < T_out; ++t) {
    Real* yo = y.row(t);
    const Real* x0 = x.row(t * k);
    for (int c = 0; c < x.cols; ++c) yo[c] = x0[c];
    for (int j = 1; j < k; ++j) {
      const Real* xj = x.row(t * k + j);
      for (int c = 0; c < x.cols; ++c) yo[c] = std::max(yo[c], xj[c]);
    }
  }
}

template <typename Real>
inline void maxpool_backward(const Mat<Real>& x, int k, const Mat<Real>& gy, Mat<Real>& gx) {
  gx.resize(x.rows, x.cols);
  const int T_out = x.rows / k;
  for (int t = 0; t < T_out; ++t) {
    const Real* gyo = gy.row(t);
    for (int c = 0; c < x.cols; ++c) {
      int best = 0;
      Real best_v = x.at(t * k, c);
      for (int j = 1; j < k; ++j) {
        const Real v = x.at(t * k + j, c);
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      }
      gx.at(t * k + best, c) += gyo[c];
    }
  }
}

template <typename Real>
inline Real leaky_relu_fwd(Real x, Real slope) {
  return x > Real(0) ? x : slope * x;
}

// In-place activation; backward reads the sign of the produced output.
template <typename Real>
inline void leaky_relu_inplace(Mat<Real>& x, Real slope) {
  for (auto& v : x.v) v = leaky_relu_fwd(v, slope);
}

template <typename Real>
inline void leaky_relu_backward_inplace(const Mat<Real>& out, Mat<Real>& g, Real slope) {
  for (std::size_t i = 0; i < out.v.size(); ++i)
    if (!(out.v[i] > Real(0))) g.v[i] *= slope;
}

// ---------------------------------------------------------------------------
// Batch normalization over (batch, time) per channel.
// ---------------------------------------------------------------------------

template <typename Real>
struct BatchNorm {
  int channels = 0;
  double momentum = 0.1;
  double eps = 1e-5;
  std::size_t gamma = 0, beta = 0;        // params
  std::size_t run_mean = 0, run_var = 0;  // buffers

  void init(ParamStore<Real>& ps, ParamStore<Real>& bs, const std::string& name, int ch,
            double mom, double epsilon) {
    channels = ch;
    momentum = mom;
    eps = epsilon;
    gamma = ps.alloc(name + ".gamma", {ch});
    beta = ps.alloc(name + ".beta", {ch});
    for (std::size_t i = 0; i < static_cast<std::size_t>(ch); ++i)
      ps.data[gamma + i] = Real(1);
    run_mean = bs.alloc(name + ".running_mean", {ch});
    run_var = bs.alloc(name + ".running_var", {ch});
    for (std::size_t i = 0; i < static_cast<std::size_t>(ch); ++i)
      bs.data[run_var + i] = Real(1);
  }

  struct Cache {
    std::vector<Real> mean, inv;  // per channel
    std::size_t count = 0;        // elements per channel
  };

  void forward_train(const ParamStore<Real>& ps, ParamStore<Real>& bs, const Batch<Real>& x,
                     Batch<Real>& y, Cache& cache, int jobs) const {
    const int C = channels;
    const std::size_t B = x.size();
    // Per-sample partial sums reduced in index order.
    std::vector<std::vector<Real>> psum(B), psq(B);
    parallel_for(B, jobs, [&](std::size_t s) {
      psum[s].assign(C, Real(0));
      psq[s].assign(C, Real(0));
      for (int t = 0; t < x[s].rows; ++t) {
        const Real* row = x[s].row(t);
        for (int c = 0; c < C; ++c) {
          psum[s][c] += row[c];
          psq[s][c] += row[c] * row[c];
        }
      }
    });
    std::size_t count = 0;
    std::vector<Real> sum(C, Real(0)), sq(C, Real(0));
    for (std::size_t s = 0; s < B; ++s) {
      count += static_cast<std::size_t>(x[s].rows);
      for (int c = 0; c < C; ++c) {
        sum[c] += psum[s][c];
        sq[c] += psq[s][c];
      }
    }
    cache.count = count;
    cache.mean.resize(C);
    cache.inv.resize(C);
    const Real n = static_cast<Real>(count);
    for (int c = 0; c < C; ++c) {
      const Real m = sum[c] / n;
      Real var = sq[c] / n - m * m;
      if (var < Real(0)) var = Real(0);
      cache.mean[c] = m;
      cache.inv[c] = Real(1) / std::sqrt(var + static_cast<Real>(eps));
      // Running stats use the unbiased variance.
      const Real unbiased = count > 1 ? var * n / (n - Real(1)) : var;
      bs.data[run_mean + c] =
          static_cast<Real>((1.0 - momentum) * bs.data[run_mean + c] + momentum * m);
      bs.data[run_var + c] =
          static_cast<Real>((1.0 - momentum) * bs.data[run_var + c] + momentum * unbiased);
    }
    apply(ps, x, y, cache.mean, cache.inv, jobs);
  }

  void forward_eval(const ParamStore<Real>& ps, const ParamStore<Real>& bs,
                    const Batch<Real>& x, Batch<Real>& y, int jobs) const {
    std::vector<Real> mean(channels), inv(channels);
    for (int c = 0; c < channels; ++c) {
      mean[c] = bs.data[run_mean + c];
      inv[c] = Real(1) / std::sqrt(bs.data[run_var + c] + static_cast<Real>(eps));
    }
    apply(ps, x, y, mean, inv, jobs);
  }

  void backward(const ParamStore<Real>& ps, const Batch<Real>& x, const Batch<Real>& gy,
                const Cache& cache, Batch<Real>& gx, std::vector<Real>& grads,
                int jobs) const {
    const int C = channels;
    const std::size_t B = x.size();
    // dgamma = sum g*xhat, dbeta = sum g (per channel, batch+time).
    std::vector<std::vector<Real>> pg(B), pgx(B);
    parallel_for(B, jobs, [&](std::size_t s) {
      pg[s].assign(C, Real(0));
      pgx[s].assign(C, Real(0));
      for (int t = 0; t < x[s].rows; ++t) {
        const Real* xr = x[s].row(t);
        const Real* gr = gy[s].row(t);
        for (int c = 0; c < C; ++c) {
          const Real xhat = (xr[c] - cache.mean[c]) * cache.inv[c];
          pg[s][c] += gr[c];
          pgx[s][c] += gr[c] * xhat;
        }
      }
    });
    std::vector<Real> sum_g(C, Real(0)), sum_gx(C, Real(0));
    for (std::size_t s = 0; s < B; ++s)
      for (int c = 0; c < C; ++c) {
        sum_g[c] += pg[s][c];
        sum_gx[c] += pgx[s][c];
      }
    Real* gG = grads.data() + gamma;
    Real* gB = grads.data() + beta;
    for (int c = 0; c < C; ++c) {
      gG[c] += sum_gx[c];
      gB[c] += sum_g[c];
    }
    const Real n = static_cast<Real>(cache.count);
    gx.resize(B);
    parallel_for(B, jobs, [&](std::size_t s) {
      gx[s].resize(x[s].rows, C);
      for (int t = 0; t < x[s].rows; ++t) {
        const Real* xr = x[s].row(t);
        const Real* gr = gy[s].row(t);
        Real* go = gx[s].row(t);
        for (int c = 0; c < C; ++c) {
          const Real xhat = (xr[c] - cache.mean[c]) * cache.inv[c];
          const Real g = ps.data[gamma + c] * cache.inv[c];
          go[c] = g * (gr[c] - (sum_g[c] + xhat * sum_gx[c]) / n);
        }
      }
    });
  }

 private:
  void apply(const ParamStore<Real>& ps, const Batch<Real>& x, Batch<Real>& y,
             const std::vector<Real>& mean, const std::vector<Real>& inv, int jobs) const {
    const int C = channels;
    y.resize(x.size());
    parallel_for(x.size(), jobs, [&](std::size_t s) {
      y[s].resize(x[s].rows, C);
      for (int t = 0; t < x[s].rows; ++t) {
        const Real* xr = x[s].row(t);
        Real* yr = y[s].row(t);
        for (int c = 0; c < C; ++c)
          yr[c] = ps.data[gamma + c] * ((xr[c] - mean[c]) * inv[c]) + ps.data[beta + c];
      }
    });
  }
};

// ---------------------------------------------------------------------------
// GRU over time; returns the full hidden sequence.
// Gate order in the stacked weight matrices: reset, update, candidate.
// ---------------------------------------------------------------------------

template <typename Real>
struct Gru {
  int in_dim = 0, hidden = 0;
  std::size_t w_ih = 0, w_hh = 0, b_ih = 0, b_hh = 0;

  void init(ParamStore<Real>& ps, const std::string& name, int in, int h) {
    in_dim = in;
    hidden = h;
    w_ih = ps.alloc(name + ".w_ih", {3 * h, in});
    w_hh = ps.alloc(name + ".w_hh", {3 * h, h});
    b_ih = ps.alloc(name + ".b_ih", {3 * h});
    b_hh = ps.alloc(name + ".b_hh", {3 * h});
  }

  struct Cache {
    Mat<Real> r, z, n, gh_n, h;  // T x H each
  };

  static Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

  // x: T x in -> h_seq: T x H
  void forward(const ParamStore<Real>& ps, const Mat<Real>& x, Mat<Real>& h_seq,
               Cache* cache) const {
    const int T = x.rows;
    const int H = hidden;
    const Real* Wih = ps.data.data() + w_ih;
    const Real* Whh = ps.data.data() + w_hh;
    const Real* Bih = ps.data.data() + b_ih;
    const Real* Bhh = ps.data.data() + b_hh;
    h_seq.resize(T, H);
    if (cache != nullptr) {
      cache->r.resize(T, H);
      cache->z.resize(T, H);
      cache->n.resize(T, H);
      cache->gh_n.resize(T, H);
    }
    std::vector<Real> h_prev(H, Real(0)), gi(3 * H), gh(3 * H);
    for (int t = 0; t < T; ++t) {
      const Real* xt = x.row(t);
      for (int o = 0; o < 3 * H; ++o) {
        const Real* wr = Wih + static_cast<std::size_t>(o) * in_dim;
        Real acc = Bih[o];
        for (int i = 0; i < in_dim; ++i) acc += wr[i] * xt[i];
        gi[o] = acc;
      }
      for (int o = 0; o < 3 * H; ++o) {
        const Real* wr = Whh + static_cast<std::size_t>(o) * H;
        Real acc = Bhh[o];
        for (int i = 0; i < H; ++i) acc += wr[i] * h_prev[i];
        gh[o] = acc;
      }
      Real* ht = h_seq.row(t);
      for (int j = 0; j < H; ++j) {
        const Real r = sigmoid(gi[j] + gh[j]);
        const Real z = sigmoid(gi[H + j] + gh[H + j]);
        const Real n = std::tanh(gi[2 * H + j] + r * gh[2 * H + j]);
        ht[j] = (Real(1) - z) * n + z * h_prev[j];
        if (cache != nullptr) {
          cache->r.at(t, j) = r;
          cache->z.at(t, j) = z;
          cache->n.at(t, j) = n;
          cache->gh_n.at(t, j) = gh[2 * H + j];
        }
      }
      for (int j = 0; j < H; ++j) h_prev[j] = ht[j];
    }
    if (cache != nullptr) cache->h = h_seq;
  }

  // g_hseq: gradient w.r.t. the full hidden sequence.
  void backward(const ParamStore<Real>& ps, const Mat<Real>& x, const Cache& cache,
                const Mat<Real>& g_hseq, Mat<Real>* gx, std::vector<Real>& grads) const {
    const int T = x.rows;
    const int H = hidden;
    const Real* Wih = ps.data.data() + w_ih;
    const Real* Whh = ps.data.data() + w_hh;
    Real* gWih = grads.data() + w_ih;
    Real* gWhh = grads.data() + w_hh;
    Real* gBih = grads.data() + b_ih;
    Real* gBhh = grads.data() + b_hh;
    if (gx != nullptr) gx->resize(T, in_dim);
    std::vector<Real> dh(H, Real(0)), dgate(3 * H);
    for (int t = T - 1; t >= 0; --t) {
      for (int j = 0; j < H; ++j) dh[j] += g_hseq.at(t, j);
      const Real* h_prev_row = t > 0 ? cache.h.row(t - 1) : nullptr;
      std::vector<Real> dh_prev(H, Real(0));
      for (int j = 0; j < H; ++j) {
        const Real r = cache.r.at(t, j);
        const Real z = cache.z.at(t, j);
        const Real n = cache.n.at(t, j);
        const Real hp = h_prev_row != nullptr ? h_prev_row[j] : Real(0);
        const Real g = dh[j];
        const Real dz = g * (hp - n);
        const Real dn = g * (Real(1) - z);
        dh_prev[j] += g * z;
        const Real dn_pre = dn * (Real(1) - n * n);
        const Real dr = dn_pre * cache.gh_n.at(t, j);
        const Real dr_pre = dr * r * (Real(1) - r);
        const Real dz_pre = dz * z * (Real(1) - z);
        dgate[j] = dr_pre;
        dgate[H + j] = dz_pre;
        dgate[2 * H + j] = dn_pre;
      }
      const Real* xt = x.row(t);
      for (int o = 0; o < 3 * H; ++o) {
        const Real d = dgate[o];
        gBih[o] += d;
        Real* gw = gWih + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) gw[i] += d * xt[i];
      }
      if (gx != nullptr) {
        Real* gxt = gx->row(t);
        for (int o = 0; o < 3 * H; ++o) {
          const Real d = dgate[o];
          const Real* wr = Wih + static_cast<std::size_t>(o) * in_dim;
          for (int i = 0; i < in_dim; ++i) gxt[i] += d * wr[i];
        }
      }
      // Hidden-to-hidden path. The candidate gate sees r * (Whh h + bhh).
      for (int j = 0; j < H; ++j) dgate[2 * H + j] *= cache.r.at(t, j);
      for (int o = 0; o < 3 * H; ++o) {
        const Real d = dgate[o];
        gBhh[o] += d;
        if (h_prev_row != nullptr) {
          Real* gw = gWhh + static_cast<std::size_t>(o) * H;
          for (int i = 0; i < H; ++i) gw[i] += d * h_prev_row[i];
        }
        const Real* wr = Whh + static_cast<std::size_t>(o) * H;
        for (int i = 0; i < H; ++i) dh_prev[i] += d * wr[i];
      }
      dh.swap(dh_prev);
    }
  }
};

// ---------------------------------------------------------------------------
// Softmax + label-smoothed cross entropy.
// ---------------------------------------------------------------------------

template <typename Real>
inline void softmax_rows(const Mat<Real>& logits, Mat<Real>& probs) {
  probs.resize(logits.rows, logits.cols);
  for (int r = 0; r < logits.rows; ++r) {
    const Real* in = logits.row(r);
    Real* out = probs.row(r);
    Real mx = in[0];
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, in[c]);
    Real denom = Real(0);
    for (int c = 0; c < logits.cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      denom += out[c];
    }
    for (int c = 0; c < logits.cols; ++c) out[c] /= denom;
  }
}

// Mean over the batch of -sum_c q_c log p_c with q = (1-eps)*onehot + eps/C.
// dlogits (optional) receives (p - q)/B.
template <typename Real>
inline double label_smoothed_ce(const Mat<Real>& logits, const std::vector<int>& labels,
                                double eps, Mat<Real>* dlogits = nullptr) {
  if (logits.rows != static_cast<int>(labels.size()))
    throw ConfigError("label_smoothed_ce: batch size mismatch");
  if (!(eps >= 0.0 && eps < 1.0))
    throw ConfigError("label_smoothed_ce: eps must be in [0,1)");
  for (const Real v : logits.v)
    if (!std::isfinite(static_cast<double>(v)))
      throw Error("label_smoothed_ce: non-finite logits");
  const int C = logits.cols;
  const int B = logits.rows;
  Mat<Real> probs;
  softmax_rows(logits, probs);
  if (dlogits != nullptr) dlogits->resize(B, C);
  double loss = 0.0;
  for (int r = 0; r < B; ++r) {
    if (labels[r] < 0 || labels[r] >= C) throw ConfigError("label out of range");
    for (int c = 0; c < C; ++c) {
      const double q = (labels[r] == c ? 1.0 - eps : 0.0) + eps / C;
      const double p = static_cast<double>(probs.at(r, c));
      loss -= q * std::log(std::max(p, 1e-300));
      if (dlogits != nullptr)
        dlogits->at(r, c) = static_cast<Real>((p - q) / B);
    }
  }
  return loss / B;
}

}  // namespace sepdet::nn
