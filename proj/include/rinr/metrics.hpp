#pragma once

// Reconstruction quality metrics: PSNR and multi-scale SSIM.
//
// MS-SSIM uses the canonical parameters: 11x11 Gaussian window with
// sigma 1.5, K1 = 0.01, K2 = 0.03, scale weights
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333), dyadic average-pool
// downsampling between scales. Frames too small for five scales get the
// largest feasible scale count with the weights renormalized, so reported
// values are comparable across runs at a fixed resolution. Channels are
// scored independently and averaged.

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rinr/tensor.hpp"

namespace rinr {

// 10*log10(peak^2 / MSE), +inf when the inputs are identical.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0) {
  if (a.shape() != b.shape()) {
    throw ShapeError("psnr: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  const auto av = a.value();
  const auto bv = b.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = double(av[i]) - double(bv[i]);
    acc += d * d;
  }
  const double mse = acc / double(av.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace detail_msssim {

inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kK1 = 0.01;
inline constexpr double kK2 = 0.03;
inline constexpr double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363,
                                       0.1333};

std::vector<double> gaussian_window();

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
};

// Valid-mode separable Gaussian filtering.
Plane blur(const Plane& p);
Plane avg_pool2(const Plane& p);

// Per-scale means: `ssim` is the mean of the full pointwise SSIM map
// (luminance * contrast-structure), `cs` the mean of the cs map alone.
struct SsimTerms {
  double ssim = 0.0;
  double cs = 0.0;
};
SsimTerms ssim_terms(const Plane& a, const Plane& b, double peak);

int feasible_scales(int h, int w);

}  // namespace detail_msssim

template <typename T>
double ms_ssim(const Tensor<T>& a, const Tensor<T>& b) {
  namespace d = detail_msssim;
  if (a.shape() != b.shape()) {
    throw ShapeError("ms_ssim: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  const Shape& s = a.shape();
  const int scales = d::feasible_scales(s.h, s.w);
  if (scales < 1) {
    throw ShapeError("ms_ssim: frame " + s.str() + " smaller than the " +
                     std::to_string(d::kWindow) + "x" +
                     std::to_string(d::kWindow) + " window");
  }
  double weight_sum = 0.0;
  for (int j = 0; j < scales; ++j) weight_sum += d::kWeights[j];

  double result = 0.0;
  const int channels = s.n * s.c;
  for (int ch = 0; ch < channels; ++ch) {
    d::Plane pa, pb;
    pa.h = pb.h = s.h;
    pa.w = pb.w = s.w;
    pa.v.resize(std::size_t(s.h) * s.w);
    pb.v.resize(std::size_t(s.h) * s.w);
    const auto av = a.value().subspan(std::size_t(ch) * s.h * s.w, pa.v.size());
    const auto bv = b.value().subspan(std::size_t(ch) * s.h * s.w, pb.v.size());
    for (std::size_t i = 0; i < pa.v.size(); ++i) {
      pa.v[i] = double(av[i]);
      pb.v[i] = double(bv[i]);
    }
    double score = 1.0;
    for (int j = 0; j < scales; ++j) {
      const d::SsimTerms terms = d::ssim_terms(pa, pb, 1.0);
      const double wj = d::kWeights[j] / weight_sum;
      if (j + 1 < scales) {
        score *= std::pow(std::max(terms.cs, 0.0), wj);
        pa = d::avg_pool2(pa);
        pb = d::avg_pool2(pb);
      } else {
        score *= std::pow(std::max(terms.ssim, 0.0), wj);
      }
    }
    result += score;
  }
  return result / double(channels);
}

struct FrameMetrics {
  double psnr_db = 0.0;
  double ms_ssim = 0.0;
};

struct MetricReport {
  std::string video_id;
  std::vector<FrameMetrics> frames;
  double mean_psnr_db = 0.0;
  double mean_ms_ssim = 0.0;
  double bpp = 0.0;  // 0 when no compressed stream is involved
};

MetricReport make_report(std::string video_id,
                         std::vector<FrameMetrics> frames, double bpp = 0.0);

// CSV rows: video_id,frame_idx,psnr_db,ms_ssim with a trailing summary row
// (frame_idx = "mean"). Infinite PSNR is serialized as "inf".
void write_metric_csv(std::ostream& out, const MetricReport& report);

std::string format_metric(double v);

}  // namespace rinr
