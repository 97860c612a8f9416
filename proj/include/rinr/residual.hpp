#pragma once

// The residual-connection pipeline: shrink each frame by an integer scale n
// (box mean), store it at 8 bits per sample, blow it back up bicubically,
// and add the decoder output on top. bpp_residual accounts for the extra
// bits the stored low-resolution frames cost per original pixel.

#include <cmath>
#include <cstdint>
#include <vector>

#include "rinr/kernels.hpp"
#include "rinr/tensor.hpp"

namespace rinr {

struct ResidualConfig {
  int n = 128;       // resize scale; must divide both frame dims
  int bit_depth = 8; // bits per stored color sample

  void validate() const {
    if (n < 1) throw ShapeError("residual config: scale n must be >= 1");
    if (bit_depth < 1 || bit_depth > 8) {
      throw ShapeError("residual config: bit depth must be in [1,8]");
    }
  }
};

// Per-frame quantized low-resolution frames, planar RGB, one code per
// sample. This is what the container carries for the residual variant.
struct ResidualStream {
  ResidualConfig config;
  int lr_h = 0;
  int lr_w = 0;
  std::vector<std::vector<std::uint8_t>> frames;  // each 3*lr_h*lr_w codes
};

// Box downsample by factor n; each output sample is the mean of its n x n
// block, accumulated in double. Frame shape (1,3,H,W) with n dividing H, W.
template <typename T>
Tensor<T> downsample(const Tensor<T>& y, int n) {
  const Shape& s = y.shape();
  if (s.n != 1 || s.c != 3) {
    throw ShapeError("downsample: expected a (1,3,H,W) frame, got " + s.str());
  }
  if (n < 1 || s.h % n != 0 || s.w % n != 0) {
    throw ShapeError("downsample: dims " + s.str() +
                     " not divisible by scale n = " + std::to_string(n));
  }
  const Shape out_shape{1, 3, s.h / n, s.w / n};
  std::vector<T> out(out_shape.numel());
  kernels::box_downsample(y.value().data(), out.data(), 3, s.h, s.w, n);
  return Tensor<T>::from_data(out_shape, std::move(out));
}

// Uniform quantization of a [0,1] image to integer codes,
// code = round(v * (2^b - 1)) with round-half-up.
template <typename T>
std::vector<std::uint8_t> quantize_lowres(const Tensor<T>& y_resize,
                                          int bit_depth) {
  if (bit_depth < 1 || bit_depth > 8) {
    throw ShapeError("quantize_lowres: bit depth must be in [1,8]");
  }
  const double qmax = double((1 << bit_depth) - 1);
  std::vector<std::uint8_t> codes(std::size_t(y_resize.numel()));
  const auto v = y_resize.value();
  for (std::int64_t i = 0; i < y_resize.numel(); ++i) {
    const double x = double(v[i]);
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument(
          "quantize_lowres: value " + std::to_string(x) +
          " outside [0,1]; clamp upstream");
    }
    codes[std::size_t(i)] = std::uint8_t(std::lround(x * qmax));
  }
  return codes;
}

template <typename T>
Tensor<T> dequantize_lowres(const std::vector<std::uint8_t>& codes, int lr_h,
                            int lr_w, int bit_depth) {
  const Shape s{1, 3, lr_h, lr_w};
  if (std::int64_t(codes.size()) != s.numel()) {
    throw ShapeError("dequantize_lowres: " + std::to_string(codes.size()) +
                     " codes for shape " + s.str());
  }
  const double qmax = double((1 << bit_depth) - 1);
  std::vector<T> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out[i] = T(double(codes[i]) / qmax);
  }
  return Tensor<T>::from_data(s, std::move(out));
}

// Separable bicubic upscale to out_dims; out_dims must be an integer
// multiple of the input dims. See kernels.hpp for kernel details.
template <typename T>
Tensor<T> bicubic_upsample(const Tensor<T>& y_resize, int out_h, int out_w) {
  const Shape& s = y_resize.shape();
  if (s.n != 1) {
    throw ShapeError("bicubic_upsample: expected batch 1, got " + s.str());
  }
  if (out_h % s.h != 0 || out_w % s.w != 0 || out_h / s.h != out_w / s.w ||
      out_h < s.h) {
    throw ShapeError("bicubic_upsample: output " + std::to_string(out_h) +
                     "x" + std::to_string(out_w) +
                     " is not an integer multiple of input " + s.str());
  }
  const int scale = out_h / s.h;
  const Shape out_shape{1, s.c, out_h, out_w};
  std::vector<T> out(out_shape.numel());
  kernels::bicubic_upscale(y_resize.value().data(), out.data(), s.c, s.h, s.w,
                           scale);
  return Tensor<T>::from_data(out_shape, std::move(out));
}

// Decode-side reconstruction: elementwise sum clamped to [0,1]. The clamp is
// for metrics and display only; training feeds the pre-clamp sum to the loss.
template <typename T>
Tensor<T> reconstruct(const Tensor<T>& y_lr, const Tensor<T>& residual_out) {
  if (y_lr.shape() != residual_out.shape()) {
    throw ShapeError("reconstruct: shape mismatch " + y_lr.shape().str() +
                     " vs " + residual_out.shape().str());
  }
  const auto a = y_lr.value();
  const auto b = residual_out.value();
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T v = a[i] + b[i];
    out[i] = v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
  }
  return Tensor<T>::from_data(y_lr.shape(), std::move(out));
}

// Bits per original pixel spent on the stored low-resolution frames:
// 3 * bit_depth / n^2.
inline double bpp_residual(int n, int bit_depth) {
  if (n < 1) throw std::invalid_argument("bpp_residual: n must be >= 1");
  return 3.0 * double(bit_depth) / (double(n) * double(n));
}

// Builds the stream for a sequence of frames and, as a convenience, the
// matching y_LR base images. Training and decoding both derive y_LR from the
// stored codes, so the residual base is bit-identical on both sides.
template <typename T>
ResidualStream build_residual_stream(const std::vector<Tensor<T>>& frames,
                                     const ResidualConfig& cfg) {
  cfg.validate();
  ResidualStream stream;
  stream.config = cfg;
  for (const auto& f : frames) {
    Tensor<T> small = downsample(f, cfg.n);
    stream.lr_h = small.shape().h;
    stream.lr_w = small.shape().w;
    stream.frames.push_back(quantize_lowres(small, cfg.bit_depth));
  }
  return stream;
}

template <typename T>
Tensor<T> lowres_base(const ResidualStream& stream, std::size_t frame_idx,
                      int frame_h, int frame_w) {
  Tensor<T> small = dequantize_lowres<T>(stream.frames.at(frame_idx),
                                         stream.lr_h, stream.lr_w,
                                         stream.config.bit_depth);
  return bicubic_upsample(small, frame_h, frame_w);
}

}  // namespace rinr
