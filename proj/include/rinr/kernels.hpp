#pragma once

// OpenMP-parallel compute kernels. Work is always split over independent
// output elements and every per-element reduction runs in a fixed order, so
// results are bit-identical for any thread count. A plain serial twin of
// each kernel lives in reference.hpp; tests assert exact equality and
// tools/bench_kernels compares their throughput.
//
// Reduction-order contract (shared with the reference implementations):
//   conv2d forward          : bias, then (in_ch, kh, kw)
//   conv2d backward/input   : (out_ch, kh, kw)
//   conv2d backward/weight  : (batch, out_h, out_w)
//   conv2d backward/bias    : (batch, out_h, out_w)
//   box_downsample          : block rows then columns, accumulated in double
//   bicubic_upscale         : horizontal taps then vertical taps, in double
// Multiply-accumulate steps use std::fma in both variants.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rinr/shape.hpp"

namespace rinr::kernels {

// ---------------------------------------------------------------------------
// Thread cap. 0 means "whatever OpenMP gives us". Callers that run several
// independent jobs side by side (the RD sweep, the acceptance harness) set
// this to 1 and parallelize across jobs instead.

inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};
  return cap;
}

inline void set_max_threads(int n) noexcept {
  thread_cap().store(n < 0 ? 0 : n, std::memory_order_relaxed);
}

inline int effective_threads() noexcept {
#ifdef _OPENMP
  int cap = thread_cap().load(std::memory_order_relaxed);
  return cap > 0 ? cap : omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------
// Convolution geometry

struct Conv2dDims {
  int batch = 0, in_ch = 0, in_h = 0, in_w = 0;
  int out_ch = 0, kernel = 0, stride = 1, pad = 0;
  int out_h = 0, out_w = 0;

  static Conv2dDims infer(const Shape& input, const Shape& weight, int stride,
                          int pad) {
    Conv2dDims d;
    d.batch = input.n;
    d.in_ch = input.c;
    d.in_h = input.h;
    d.in_w = input.w;
    d.out_ch = weight.n;
    d.kernel = weight.h;
    d.stride = stride;
    d.pad = pad;
    d.out_h = (input.h + 2 * pad - weight.h) / stride + 1;
    d.out_w = (input.w + 2 * pad - weight.w) / stride + 1;
    return d;
  }

  std::int64_t in_numel() const {
    return std::int64_t(batch) * in_ch * in_h * in_w;
  }
  std::int64_t out_numel() const {
    return std::int64_t(batch) * out_ch * out_h * out_w;
  }
};

namespace detail {

// Range of out positions whose source index o*stride - pad + k stays inside
// [0, limit). Returns {lo, hi} with lo > hi when empty.
inline std::pair<int, int> valid_out_range(int k, int pad, int stride,
                                           int limit, int out_count) {
  int lo = 0;
  int num = pad - k;
  if (num > 0) lo = (num + stride - 1) / stride;
  int hi = out_count - 1;
  int max_num = limit - 1 + pad - k;
  if (max_num < 0) return {1, 0};
  hi = std::min(hi, max_num / stride);
  return {lo, hi};
}

}  // namespace detail

// out = conv2d(in, w) + b. `bias` may be null.
template <typename T>
void conv2d_forward(const T* in, const T* w, const T* bias, T* out,
                    const Conv2dDims& d) {
  const int K = d.kernel;
#pragma omp parallel for collapse(3) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int n = 0; n < d.batch; ++n) {
    for (int oc = 0; oc < d.out_ch; ++oc) {
      for (int oh = 0; oh < d.out_h; ++oh) {
        T* orow = out + ((std::int64_t(n) * d.out_ch + oc) * d.out_h + oh) *
                            d.out_w;
        const T init = bias ? bias[oc] : T(0);
        for (int ow = 0; ow < d.out_w; ++ow) orow[ow] = init;
        const T* wc = w + std::int64_t(oc) * d.in_ch * K * K;
        for (int ic = 0; ic < d.in_ch; ++ic) {
          for (int kh = 0; kh < K; ++kh) {
            const int ih = oh * d.stride - d.pad + kh;
            if (ih < 0 || ih >= d.in_h) continue;
            const T* irow =
                in + ((std::int64_t(n) * d.in_ch + ic) * d.in_h + ih) * d.in_w;
            const T* wrow = wc + (std::int64_t(ic) * K + kh) * K;
            for (int kw = 0; kw < K; ++kw) {
              const T wv = wrow[kw];
              const auto [lo, hi] = detail::valid_out_range(
                  kw, d.pad, d.stride, d.in_w, d.out_w);
              const int shift = kw - d.pad;
              for (int ow = lo; ow <= hi; ++ow) {
                orow[ow] = std::fma(irow[ow * d.stride + shift], wv, orow[ow]);
              }
            }
          }
        }
      }
    }
  }
}

// gin += d(conv)/d(in) applied to gout.
template <typename T>
void conv2d_backward_input(const T* gout, const T* w, T* gin,
                           const Conv2dDims& d) {
  const int K = d.kernel;
#pragma omp parallel for collapse(3) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int n = 0; n < d.batch; ++n) {
    for (int ic = 0; ic < d.in_ch; ++ic) {
      for (int ih = 0; ih < d.in_h; ++ih) {
        std::vector<T> acc(d.in_w, T(0));
        for (int oc = 0; oc < d.out_ch; ++oc) {
          for (int kh = 0; kh < K; ++kh) {
            const int oh_num = ih + d.pad - kh;
            if (oh_num < 0 || oh_num % d.stride != 0) continue;
            const int oh = oh_num / d.stride;
            if (oh >= d.out_h) continue;
            const T* gorow =
                gout +
                ((std::int64_t(n) * d.out_ch + oc) * d.out_h + oh) * d.out_w;
            const T* wrow = w + ((std::int64_t(oc) * d.in_ch + ic) * K + kh) * K;
            for (int kw = 0; kw < K; ++kw) {
              const T wv = wrow[kw];
              const auto [lo, hi] = detail::valid_out_range(
                  kw, d.pad, d.stride, d.in_w, d.out_w);
              const int shift = kw - d.pad;
              for (int ow = lo; ow <= hi; ++ow) {
                const int iw = ow * d.stride + shift;
                acc[iw] = std::fma(gorow[ow], wv, acc[iw]);
              }
            }
          }
        }
        T* grow =
            gin + ((std::int64_t(n) * d.in_ch + ic) * d.in_h + ih) * d.in_w;
        for (int iw = 0; iw < d.in_w; ++iw) grow[iw] += acc[iw];
      }
    }
  }
}

// gw += d(conv)/d(w) applied to gout.
template <typename T>
void conv2d_backward_weight(const T* gout, const T* in, T* gw,
                            const Conv2dDims& d) {
  const int K = d.kernel;
#pragma omp parallel for collapse(3) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int oc = 0; oc < d.out_ch; ++oc) {
    for (int ic = 0; ic < d.in_ch; ++ic) {
      for (int kh = 0; kh < K; ++kh) {
        for (int kw = 0; kw < K; ++kw) {
          T acc(0);
          for (int n = 0; n < d.batch; ++n) {
            for (int oh = 0; oh < d.out_h; ++oh) {
              const int ih = oh * d.stride - d.pad + kh;
              if (ih < 0 || ih >= d.in_h) continue;
              const T* gorow =
                  gout +
                  ((std::int64_t(n) * d.out_ch + oc) * d.out_h + oh) * d.out_w;
              const T* irow =
                  in +
                  ((std::int64_t(n) * d.in_ch + ic) * d.in_h + ih) * d.in_w;
              const auto [lo, hi] = detail::valid_out_range(
                  kw, d.pad, d.stride, d.in_w, d.out_w);
              const int shift = kw - d.pad;
              for (int ow = lo; ow <= hi; ++ow) {
                acc = std::fma(gorow[ow], irow[ow * d.stride + shift], acc);
              }
            }
          }
          gw[((std::int64_t(oc) * d.in_ch + ic) * K + kh) * K + kw] += acc;
        }
      }
    }
  }
}

// gb += d(conv)/d(bias) applied to gout.
template <typename T>
void conv2d_backward_bias(const T* gout, T* gb, const Conv2dDims& d) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int oc = 0; oc < d.out_ch; ++oc) {
    T acc(0);
    for (int n = 0; n < d.batch; ++n) {
      const T* base =
          gout + (std::int64_t(n) * d.out_ch + oc) * d.out_h * d.out_w;
      for (std::int64_t i = 0; i < std::int64_t(d.out_h) * d.out_w; ++i) {
        acc += base[i];
      }
    }
    gb[oc] += acc;
  }
}

// ---------------------------------------------------------------------------
// Pixel shuffle: (N, C*r^2, H, W) -> (N, C, rH, rW).
// out(n, c, r*h+i, r*w+j) = in(n, c*r^2 + i*r + j, h, w).

template <typename T, bool Accumulate = false>
void pixel_shuffle(const T* in, T* out, int batch, int out_ch, int in_h,
                   int in_w, int r) {
  const int in_ch = out_ch * r * r;
  const int out_h = in_h * r, out_w = in_w * r;
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < out_ch; ++c) {
      for (int oh = 0; oh < out_h; ++oh) {
        const int h = oh / r, i = oh % r;
        T* orow = out + ((std::int64_t(n) * out_ch + c) * out_h + oh) * out_w;
        for (int ow = 0; ow < out_w; ++ow) {
          const int w = ow / r, j = ow % r;
          const int ic = c * r * r + i * r + j;
          const T v =
              in[((std::int64_t(n) * in_ch + ic) * in_h + h) * in_w + w];
          if constexpr (Accumulate) {
            orow[ow] += v;
          } else {
            orow[ow] = v;
          }
        }
      }
    }
  }
}

// Exact inverse: (N, C, rH, rW) -> (N, C*r^2, H, W).
template <typename T, bool Accumulate = false>
void pixel_unshuffle(const T* in, T* out, int batch, int base_ch, int out_h,
                     int out_w, int r) {
  const int in_h = out_h * r, in_w = out_w * r;
  const int out_ch = base_ch * r * r;
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int n = 0; n < batch; ++n) {
    for (int oc = 0; oc < out_ch; ++oc) {
      const int c = oc / (r * r);
      const int i = (oc / r) % r, j = oc % r;
      for (int h = 0; h < out_h; ++h) {
        T* orow = out + ((std::int64_t(n) * out_ch + oc) * out_h + h) * out_w;
        const T* irow = in + ((std::int64_t(n) * base_ch + c) * in_h +
                              (h * r + i)) *
                                 in_w;
        for (int w = 0; w < out_w; ++w) {
          const T v = irow[w * r + j];
          if constexpr (Accumulate) {
            orow[w] += v;
          } else {
            orow[w] = v;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise activations. Transcendentals are evaluated in double so the
// float and double tensor paths share one definition.

namespace detail {

inline double gauss_cdf(double x) {
  return 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
}
inline double gauss_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

}  // namespace detail

template <typename T>
void gelu_forward(const T* x, T* y, std::int64_t count) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    const double v = double(x[i]);
    y[i] = T(v * detail::gauss_cdf(v));
  }
}

template <typename T>
void gelu_backward(const T* x, const T* gy, T* gx, std::int64_t count) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    const double v = double(x[i]);
    const double slope = detail::gauss_cdf(v) + v * detail::gauss_pdf(v);
    gx[i] += T(double(gy[i]) * slope);
  }
}

template <typename T>
void sigmoid_forward(const T* x, T* y, std::int64_t count) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    y[i] = T(1.0 / (1.0 + std::exp(-double(x[i]))));
  }
}

template <typename T>
void sigmoid_backward(const T* x, const T* gy, T* gx, std::int64_t count) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-double(x[i])));
    gx[i] += T(double(gy[i]) * s * (1.0 - s));
  }
}

template <typename T>
void add_forward(const T* a, const T* b, T* out, std::int64_t count) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (std::int64_t i = 0; i < count; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void accumulate(const T* src, T* dst, std::int64_t count) {
#pragma omp parallel for schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (std::int64_t i = 0; i < count; ++i) dst[i] += src[i];
}

// ---------------------------------------------------------------------------
// Box downsample by integer factor n: each output sample is the mean of its
// n x n source block, accumulated in double.

template <typename T>
void box_downsample(const T* in, T* out, int ch, int in_h, int in_w, int n) {
  const int out_h = in_h / n, out_w = in_w / n;
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int c = 0; c < ch; ++c) {
    for (int oh = 0; oh < out_h; ++oh) {
      for (int ow = 0; ow < out_w; ++ow) {
        double acc = 0.0;
        for (int dy = 0; dy < n; ++dy) {
          const T* row =
              in + (std::int64_t(c) * in_h + (oh * n + dy)) * in_w + ow * n;
          for (int dx = 0; dx < n; ++dx) acc += double(row[dx]);
        }
        out[(std::int64_t(c) * out_h + oh) * out_w + ow] =
            T(acc / (double(n) * double(n)));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Separable bicubic upscale by an integer factor with half-pixel-center
// coordinate mapping and edge-clamped sampling. The cubic convolution kernel
// parameter is kCubicA; cubic_taps exposes the 4-tap weights at fractional
// offset t for verification.

inline constexpr double kCubicA = -0.5625;

inline std::array<double, 4> cubic_taps(double t) {
  const double A = kCubicA;
  auto inner = [A](double x) { return ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0; };
  auto outer = [A](double x) { return ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A; };
  return {outer(1.0 + t), inner(t), inner(1.0 - t), outer(2.0 - t)};
}

namespace detail {

struct TapPlan {
  std::vector<int> idx;      // 4 clamped source indices per output position
  std::vector<double> wgt;   // 4 weights per output position
};

inline TapPlan bicubic_plan(int in_len, int scale) {
  TapPlan plan;
  const int out_len = in_len * scale;
  plan.idx.resize(std::size_t(out_len) * 4);
  plan.wgt.resize(std::size_t(out_len) * 4);
  for (int o = 0; o < out_len; ++o) {
    const double x = (o + 0.5) / double(scale) - 0.5;
    const double base = std::floor(x);
    const double t = x - base;
    const auto w = cubic_taps(t);
    const int i0 = int(base);
    for (int q = 0; q < 4; ++q) {
      plan.idx[std::size_t(o) * 4 + q] =
          std::clamp(i0 - 1 + q, 0, in_len - 1);
      plan.wgt[std::size_t(o) * 4 + q] = w[std::size_t(q)];
    }
  }
  return plan;
}

}  // namespace detail

template <typename T>
void bicubic_upscale(const T* in, T* out, int ch, int in_h, int in_w,
                     int scale) {
  const int out_h = in_h * scale, out_w = in_w * scale;
  const detail::TapPlan cols = detail::bicubic_plan(in_w, scale);
  const detail::TapPlan rows = detail::bicubic_plan(in_h, scale);

  // Horizontal pass into a double intermediate, then vertical pass.
  std::vector<double> tmp(std::size_t(ch) * in_h * out_w);
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < in_h; ++y) {
      const T* irow = in + (std::int64_t(c) * in_h + y) * in_w;
      double* trow = tmp.data() + (std::int64_t(c) * in_h + y) * out_w;
      for (int o = 0; o < out_w; ++o) {
        const int* ix = cols.idx.data() + std::size_t(o) * 4;
        const double* wq = cols.wgt.data() + std::size_t(o) * 4;
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) {
          acc = std::fma(double(irow[ix[q]]), wq[q], acc);
        }
        trow[o] = acc;
      }
    }
  }
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(rinr::kernels::effective_threads())
  for (int c = 0; c < ch; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int* iy = rows.idx.data() + std::size_t(oy) * 4;
      const double* wq = rows.wgt.data() + std::size_t(oy) * 4;
      T* orow = out + (std::int64_t(c) * out_h + oy) * out_w;
      for (int o = 0; o < out_w; ++o) {
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) {
          acc = std::fma(tmp[(std::int64_t(c) * in_h + iy[q]) * out_w + o],
                         wq[q], acc);
        }
        orow[o] = T(acc);
      }
    }
  }
}

}  // namespace rinr::kernels
