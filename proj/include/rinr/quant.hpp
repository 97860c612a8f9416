#pragma once

// Post-training quantization and the packed bitstream container.
//
// Tensors are quantized with per-tensor affine min-max mapping:
//   scale = (max - min) / (2^bits - 1)   (1 if max == min)
//   code  = round((v - min) / scale)
// Codes are bit-packed MSB-first; each blob is padded to a byte boundary.
// The container layout is documented field by field in docs/FORMAT.md.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rinr/io_util.hpp"
#include "rinr/model.hpp"
#include "rinr/residual.hpp"
#include "rinr/tensor.hpp"

namespace rinr {

struct QuantizedBlob {
  Shape shape;
  int bits = 8;
  double min_val = 0.0;
  double scale = 1.0;
  std::vector<std::uint16_t> codes;

  std::uint32_t qmax() const { return (1u << bits) - 1u; }
  std::int64_t payload_bits() const {
    return std::int64_t(codes.size()) * bits;
  }
};

template <typename T>
QuantizedBlob quantize_tensor(const Tensor<T>& t, int bits) {
  if (bits < 1 || bits > 16) {
    throw std::invalid_argument("quantize_tensor: bits must be in [1,16]");
  }
  const auto v = t.value();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const T x : v) {
    const double d = double(x);
    if (!std::isfinite(d)) {
      throw std::invalid_argument("quantize_tensor: non-finite value");
    }
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (v.empty()) lo = hi = 0.0;
  QuantizedBlob blob;
  blob.shape = t.shape();
  blob.bits = bits;
  blob.min_val = lo;
  const double qmax = double(blob.qmax());
  blob.scale = (hi > lo) ? (hi - lo) / qmax : 1.0;
  blob.codes.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double q = (double(v[i]) - lo) / blob.scale;
    long code = std::lround(q);
    if (code < 0) code = 0;
    if (code > long(blob.qmax())) code = long(blob.qmax());
    blob.codes[i] = std::uint16_t(code);
  }
  return blob;
}

template <typename T>
Tensor<T> dequantize_tensor(const QuantizedBlob& blob) {
  if (std::int64_t(blob.codes.size()) != blob.shape.numel()) {
    throw DecodeError("dequantize: code count " +
                      std::to_string(blob.codes.size()) +
                      " does not match shape " + blob.shape.str());
  }
  std::vector<T> out(blob.codes.size());
  const std::uint32_t qmax = blob.qmax();
  for (std::size_t i = 0; i < blob.codes.size(); ++i) {
    if (blob.codes[i] > qmax) {
      throw DecodeError("dequantize: code " + std::to_string(blob.codes[i]) +
                        " exceeds " + std::to_string(blob.bits) +
                        "-bit range (corrupt stream)");
    }
    out[i] = T(blob.min_val + double(blob.codes[i]) * blob.scale);
  }
  return Tensor<T>::from_data(blob.shape, std::move(out));
}

// The unit of bpp accounting: everything the decoder needs, nothing else.
struct CompressedVideo {
  Variant variant = Variant::baseline;
  int frame_h = 0;
  int frame_w = 0;
  int frame_count = 0;
  int scale_n = 0;  // residual resize scale (carried for both variants)
  int bit_depth = 8;
  int feature_bits = 6;
  int model_bits = 8;
  ModelConfig model_config;
  std::vector<QuantizedBlob> decoder_blobs;
  std::vector<QuantizedBlob> feature_blobs;  // one per frame
  std::optional<ResidualStream> residual;
};

std::vector<std::uint8_t> pack(const CompressedVideo& cv);
CompressedVideo unpack(std::span<const std::uint8_t> bytes);

struct BppBreakdown {
  double decoder = 0.0;   // decoder code bits / pixel
  double features = 0.0;  // feature code bits / pixel
  double residual = 0.0;  // residual sample bits / pixel; equals
                          // bpp_residual(n, bit_depth) by construction
  double header = 0.0;    // everything else: headers, blob metadata, padding
  double total = 0.0;     // packed size / pixel
};

BppBreakdown bpp_breakdown(const CompressedVideo& cv);
double total_bpp(const CompressedVideo& cv);

}  // namespace rinr
