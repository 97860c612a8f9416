#pragma once

// HNeRV-style autoencoder. A per-frame encoder squeezes the frame into a
// small feature map; a shared decoder built from conv + pixel-shuffle stages
// regenerates the frame (baseline) or its detail correction (residual
// variant). Only the decoder and the per-frame features are part of the
// transmitted representation; the encoder is training-time apparatus, so
// parameter budgets and counts are decoder-only.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rinr/ops.hpp"
#include "rinr/tensor.hpp"

namespace rinr {

enum class Variant : std::uint8_t { baseline = 0, residual = 1 };

inline const char* variant_name(Variant v) {
  return v == Variant::baseline ? "baseline" : "residual";
}

struct DecoderStage {
  int upsample = 2;  // pixel-shuffle factor
  int kernel = 3;    // conv kernel (odd), pad = kernel/2
};

struct ModelConfig {
  Variant variant = Variant::baseline;
  int feature_c = 16;
  int feature_h = 0;
  int feature_w = 0;
  std::vector<DecoderStage> stages;
  int base_width = 0;          // channels of the first decoder stage
  double target_params = 0.0;  // decoder budget; 0 keeps base_width as-is
  int encoder_width = 16;

  int total_upsample() const {
    int f = 1;
    for (const auto& s : stages) f *= s.upsample;
    return f;
  }
  int frame_h() const { return feature_h * total_upsample(); }
  int frame_w() const { return feature_w * total_upsample(); }

  void validate() const;

  // Default desk-scale config: feature map (feature_c, h/32, w/32) with five
  // 2x pixel-shuffle stages of 3x3 convs.
  static ModelConfig for_frame(int frame_h, int frame_w, int feature_c = 16,
                               int down_factor = 32);
};

// Decoder stage widths for a given first-stage width: halved per stage with
// a small floor.
std::vector<int> decoder_widths(const ModelConfig& cfg, int base_width);

std::int64_t decoder_param_count(const ModelConfig& cfg, int base_width);
std::int64_t encoder_param_count(const ModelConfig& cfg);

// Smallest-error width for cfg.target_params. Throws if no width lands
// within +-5%, naming the nearest achievable counts.
int resolve_base_width(const ModelConfig& cfg);

template <typename T>
struct Model {
  ModelConfig config;
  std::vector<Tensor<T>> enc_w, enc_b;
  std::vector<Tensor<T>> dec_w, dec_b;  // stage convs then the 3-channel head

  std::vector<Tensor<T>*> parameters() {
    std::vector<Tensor<T>*> out;
    for (auto& t : enc_w) out.push_back(&t);
    for (auto& t : enc_b) out.push_back(&t);
    for (auto& t : dec_w) out.push_back(&t);
    for (auto& t : dec_b) out.push_back(&t);
    return out;
  }
};

// Decoder-only parameter count (the transmitted representation).
template <typename T>
std::int64_t count_params(const Model<T>& m) {
  std::int64_t n = 0;
  for (const auto& t : m.dec_w) n += t.numel();
  for (const auto& t : m.dec_b) n += t.numel();
  return n;
}

template <typename T>
std::int64_t count_encoder_params(const Model<T>& m) {
  std::int64_t n = 0;
  for (const auto& t : m.enc_w) n += t.numel();
  for (const auto& t : m.enc_b) n += t.numel();
  return n;
}

namespace detail {

// Kaiming-style uniform fan-in init, drawn deterministically from rng in
// declaration order.
template <typename T>
void init_conv(Tensor<T>& w, Tensor<T>& b, std::mt19937& rng) {
  const Shape& s = w.shape();
  const double fan_in = double(s.c) * s.h * s.w;
  const double wb = std::sqrt(6.0 / fan_in);
  auto wd = w.mutable_value();
  for (auto& v : wd) v = T((canonical_uniform(rng) * 2.0 - 1.0) * wb);
  const double bb = 1.0 / std::sqrt(fan_in);
  auto bd = b.mutable_value();
  for (auto& v : bd) v = T((canonical_uniform(rng) * 2.0 - 1.0) * bb);
}

}  // namespace detail

// Deterministic model construction. Runs the width search when
// cfg.base_width == 0 and a target is set.
template <typename T>
Model<T> build_model(ModelConfig cfg, std::uint32_t seed) {
  if (cfg.base_width == 0) cfg.base_width = resolve_base_width(cfg);
  cfg.validate();
  Model<T> m;
  m.config = cfg;
  std::mt19937 rng(seed);

  // Encoder: stride-r 3x3 convs mirroring the decoder factors in reverse,
  // GELU after each.
  {
    int in_ch = 3;
    const int n_stages = int(cfg.stages.size());
    for (int i = 0; i < n_stages; ++i) {
      const int out_ch =
          (i == n_stages - 1) ? cfg.feature_c : cfg.encoder_width;
      Tensor<T> w = Tensor<T>::zeros({out_ch, in_ch, 3, 3}, true);
      Tensor<T> b = Tensor<T>::zeros({1, out_ch, 1, 1}, true);
      detail::init_conv(w, b, rng);
      m.enc_w.push_back(w);
      m.enc_b.push_back(b);
      in_ch = out_ch;
    }
  }

  // Decoder stages: conv expanding channels by r^2, pixel shuffle, GELU;
  // then a 3x3 head to RGB.
  {
    const auto widths = decoder_widths(cfg, cfg.base_width);
    int in_ch = cfg.feature_c;
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
      const int r = cfg.stages[i].upsample;
      const int k = cfg.stages[i].kernel;
      const int out_ch = widths[i] * r * r;
      Tensor<T> w = Tensor<T>::zeros({out_ch, in_ch, k, k}, true);
      Tensor<T> b = Tensor<T>::zeros({1, out_ch, 1, 1}, true);
      detail::init_conv(w, b, rng);
      m.dec_w.push_back(w);
      m.dec_b.push_back(b);
      in_ch = widths[i];
    }
    Tensor<T> w = Tensor<T>::zeros({3, in_ch, 3, 3}, true);
    Tensor<T> b = Tensor<T>::zeros({1, 3, 1, 1}, true);
    detail::init_conv(w, b, rng);
    m.dec_w.push_back(w);
    m.dec_b.push_back(b);
  }
  return m;
}

template <typename T>
Tensor<T> encoder_forward(const Model<T>& m, const Tensor<T>& frame) {
  const ModelConfig& cfg = m.config;
  const Shape want{1, 3, cfg.frame_h(), cfg.frame_w()};
  if (frame.shape() != want) {
    throw ShapeError("encoder_forward: frame " + frame.shape().str() +
                     ", expected " + want.str());
  }
  Tensor<T> x = frame;
  const int n_stages = int(cfg.stages.size());
  for (int i = 0; i < n_stages; ++i) {
    const int stride = cfg.stages[n_stages - 1 - i].upsample;
    x = gelu(conv2d(x, m.enc_w[i], m.enc_b[i], stride, 1));
  }
  return x;
}

template <typename T>
Tensor<T> decoder_forward(const Model<T>& m, const Tensor<T>& feature) {
  const ModelConfig& cfg = m.config;
  const Shape want{1, cfg.feature_c, cfg.feature_h, cfg.feature_w};
  if (feature.shape() != want) {
    throw ShapeError("decoder_forward: feature " + feature.shape().str() +
                     ", expected " + want.str());
  }
  Tensor<T> x = feature;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const int r = cfg.stages[i].upsample;
    const int k = cfg.stages[i].kernel;
    x = gelu(pixel_shuffle(conv2d(x, m.dec_w[i], m.dec_b[i], 1, k / 2), r));
  }
  x = conv2d(x, m.dec_w.back(), m.dec_b.back(), 1, 1);
  if (cfg.variant == Variant::baseline) x = sigmoid(x);
  return x;
}

// Checkpoint file: "RINR" magic, config header, raw little-endian float32
// parameter tensors in declaration order. Bit-exact round trip.
void save_checkpoint(const std::filesystem::path& path, const Model<float>& m);
Model<float> load_checkpoint(const std::filesystem::path& path);

class ByteWriter;
class ByteReader;

namespace detail_model {
// Config block (de)serialization shared with the compressed container.
void write_config_bytes(ByteWriter& w, const ModelConfig& cfg);
ModelConfig read_config_bytes(ByteReader& r);
}  // namespace detail_model

}  // namespace rinr
