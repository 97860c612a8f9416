#pragma once

// Serial reference implementations of the kernels in kernels.hpp, written as
// plain loop nests. They follow the same reduction-order contract (see
// kernels.hpp), so tests can require bit-exact agreement with the parallel
// versions, and tools/bench_kernels uses them as the baseline.

#include <cmath>
#include <cstdint>
#include <vector>

#include "rinr/kernels.hpp"

namespace rinr::reference {

using kernels::Conv2dDims;

template <typename T>
void conv2d_forward(const T* in, const T* w, const T* bias, T* out,
                    const Conv2dDims& d) {
  const int K = d.kernel;
  for (int n = 0; n < d.batch; ++n) {
    for (int oc = 0; oc < d.out_ch; ++oc) {
      for (int oh = 0; oh < d.out_h; ++oh) {
        for (int ow = 0; ow < d.out_w; ++ow) {
          T acc = bias ? bias[oc] : T(0);
          for (int ic = 0; ic < d.in_ch; ++ic) {
            for (int kh = 0; kh < K; ++kh) {
              const int ih = oh * d.stride - d.pad + kh;
              if (ih < 0 || ih >= d.in_h) continue;
              for (int kw = 0; kw < K; ++kw) {
                const int iw = ow * d.stride - d.pad + kw;
                if (iw < 0 || iw >= d.in_w) continue;
                acc = std::fma(
                    in[((std::int64_t(n) * d.in_ch + ic) * d.in_h + ih) *
                           d.in_w +
                       iw],
                    w[((std::int64_t(oc) * d.in_ch + ic) * K + kh) * K + kw],
                    acc);
              }
            }
          }
          out[((std::int64_t(n) * d.out_ch + oc) * d.out_h + oh) * d.out_w +
              ow] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gout, const T* w, T* gin,
                           const Conv2dDims& d) {
  const int K = d.kernel;
  for (int n = 0; n < d.batch; ++n) {
    for (int ic = 0; ic < d.in_ch; ++ic) {
      for (int ih = 0; ih < d.in_h; ++ih) {
        for (int iw = 0; iw < d.in_w; ++iw) {
          T acc(0);
          for (int oc = 0; oc < d.out_ch; ++oc) {
            for (int kh = 0; kh < K; ++kh) {
              const int oh_num = ih + d.pad - kh;
              if (oh_num < 0 || oh_num % d.stride != 0) continue;
              const int oh = oh_num / d.stride;
              if (oh >= d.out_h) continue;
              for (int kw = 0; kw < K; ++kw) {
                const int ow_num = iw + d.pad - kw;
                if (ow_num < 0 || ow_num % d.stride != 0) continue;
                const int ow = ow_num / d.stride;
                if (ow >= d.out_w) continue;
                acc = std::fma(
                    gout[((std::int64_t(n) * d.out_ch + oc) * d.out_h + oh) *
                             d.out_w +
                         ow],
                    w[((std::int64_t(oc) * d.in_ch + ic) * K + kh) * K + kw],
                    acc);
              }
            }
          }
          gin[((std::int64_t(n) * d.in_ch + ic) * d.in_h + ih) * d.in_w + iw] +=
              acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const T* gout, const T* in, T* gw,
                            const Conv2dDims& d) {
  const int K = d.kernel;
  for (int oc = 0; oc < d.out_ch; ++oc) {
    for (int ic = 0; ic < d.in_ch; ++ic) {
      for (int kh = 0; kh < K; ++kh) {
        for (int kw = 0; kw < K; ++kw) {
          T acc(0);
          for (int n = 0; n < d.batch; ++n) {
            for (int oh = 0; oh < d.out_h; ++oh) {
              const int ih = oh * d.stride - d.pad + kh;
              if (ih < 0 || ih >= d.in_h) continue;
              for (int ow = 0; ow < d.out_w; ++ow) {
                const int iw = ow * d.stride - d.pad + kw;
                if (iw < 0 || iw >= d.in_w) continue;
                acc = std::fma(
                    gout[((std::int64_t(n) * d.out_ch + oc) * d.out_h + oh) *
                             d.out_w +
                         ow],
                    in[((std::int64_t(n) * d.in_ch + ic) * d.in_h + ih) *
                           d.in_w +
                       iw],
                    acc);
              }
            }
          }
          gw[((std::int64_t(oc) * d.in_ch + ic) * K + kh) * K + kw] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_bias(const T* gout, T* gb, const Conv2dDims& d) {
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

template <typename T>
void pixel_shuffle(const T* in, T* out, int batch, int out_ch, int in_h,
                   int in_w, int r) {
  const int in_ch = out_ch * r * r;
  const int out_h = in_h * r, out_w = in_w * r;
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < out_ch; ++c) {
      for (int oh = 0; oh < out_h; ++oh) {
        for (int ow = 0; ow < out_w; ++ow) {
          const int ic = c * r * r + (oh % r) * r + (ow % r);
          out[((std::int64_t(n) * out_ch + c) * out_h + oh) * out_w + ow] =
              in[((std::int64_t(n) * in_ch + ic) * in_h + oh / r) * in_w +
                 ow / r];
        }
      }
    }
  }
}

template <typename T>
void box_downsample(const T* in, T* out, int ch, int in_h, int in_w, int n) {
  const int out_h = in_h / n, out_w = in_w / n;
  for (int c = 0; c < ch; ++c) {
    for (int oh = 0; oh < out_h; ++oh) {
      for (int ow = 0; ow < out_w; ++ow) {
        double acc = 0.0;
        for (int dy = 0; dy < n; ++dy) {
          for (int dx = 0; dx < n; ++dx) {
            acc += double(
                in[(std::int64_t(c) * in_h + (oh * n + dy)) * in_w + ow * n +
                   dx]);
          }
        }
        out[(std::int64_t(c) * out_h + oh) * out_w + ow] =
            T(acc / (double(n) * double(n)));
      }
    }
  }
}

template <typename T>
void bicubic_upscale(const T* in, T* out, int ch, int in_h, int in_w,
                     int scale) {
  const int out_h = in_h * scale, out_w = in_w * scale;
  const auto cols = kernels::detail::bicubic_plan(in_w, scale);
  const auto rows = kernels::detail::bicubic_plan(in_h, scale);
  std::vector<double> tmp(std::size_t(ch) * in_h * out_w);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < in_h; ++y) {
      for (int o = 0; o < out_w; ++o) {
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) {
          acc = std::fma(
              double(in[(std::int64_t(c) * in_h + y) * in_w +
                        cols.idx[std::size_t(o) * 4 + q]]),
              cols.wgt[std::size_t(o) * 4 + q], acc);
        }
        tmp[(std::int64_t(c) * in_h + y) * out_w + o] = acc;
      }
    }
  }
  for (int c = 0; c < ch; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int o = 0; o < out_w; ++o) {
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) {
          acc = std::fma(tmp[(std::int64_t(c) * in_h +
                              rows.idx[std::size_t(oy) * 4 + q]) *
                                 out_w +
                             o],
                         rows.wgt[std::size_t(oy) * 4 + q], acc);
        }
        out[(std::int64_t(c) * out_h + oy) * out_w + o] = T(acc);
      }
    }
  }
}

}  // namespace rinr::reference
