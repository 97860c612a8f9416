#include "rinr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rinr/io_util.hpp"

namespace rinr {

void ModelConfig::validate() const {
  if (feature_c < 1 || feature_h < 1 || feature_w < 1) {
    throw ShapeError("model config: feature shape (" +
                     std::to_string(feature_c) + "," +
                     std::to_string(feature_h) + "," +
                     std::to_string(feature_w) + ") must be positive");
  }
  if (stages.empty()) {
    throw ShapeError("model config: at least one decoder stage required");
  }
  for (const auto& s : stages) {
    if (s.upsample < 1) {
      throw ShapeError("model config: upsample factor must be >= 1");
    }
    if (s.kernel < 1 || s.kernel % 2 == 0) {
      throw ShapeError("model config: kernel must be odd, got " +
                       std::to_string(s.kernel));
    }
  }
  if (base_width < 1) {
    throw ShapeError("model config: base width must be >= 1");
  }
  if (encoder_width < 1) {
    throw ShapeError("model config: encoder width must be >= 1");
  }
}

ModelConfig ModelConfig::for_frame(int frame_h, int frame_w, int feature_c,
                                   int down_factor) {
  if (down_factor < 2 || (down_factor & (down_factor - 1)) != 0) {
    throw ShapeError("down factor must be a power of two >= 2, got " +
                     std::to_string(down_factor));
  }
  if (frame_h % down_factor != 0 || frame_w % down_factor != 0) {
    throw ShapeError("frame " + std::to_string(frame_h) + "x" +
                     std::to_string(frame_w) + " not divisible by down factor " +
                     std::to_string(down_factor));
  }
  ModelConfig cfg;
  cfg.feature_c = feature_c;
  cfg.feature_h = frame_h / down_factor;
  cfg.feature_w = frame_w / down_factor;
  for (int f = down_factor; f > 1; f /= 2) cfg.stages.push_back({2, 3});
  return cfg;
}

std::vector<int> decoder_widths(const ModelConfig& cfg, int base_width) {
  const int floor_w = std::min(base_width, 4);
  std::vector<int> widths;
  widths.reserve(cfg.stages.size());
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    widths.push_back(std::max(base_width >> i, floor_w));
  }
  return widths;
}

std::int64_t decoder_param_count(const ModelConfig& cfg, int base_width) {
  const auto widths = decoder_widths(cfg, base_width);
  std::int64_t total = 0;
  int in_ch = cfg.feature_c;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const int r = cfg.stages[i].upsample;
    const int k = cfg.stages[i].kernel;
    const int out_ch = widths[i] * r * r;
    total += std::int64_t(out_ch) * in_ch * k * k + out_ch;
    in_ch = widths[i];
  }
  total += std::int64_t(3) * in_ch * 3 * 3 + 3;  // head
  return total;
}

std::int64_t encoder_param_count(const ModelConfig& cfg) {
  std::int64_t total = 0;
  int in_ch = 3;
  const int n_stages = int(cfg.stages.size());
  for (int i = 0; i < n_stages; ++i) {
    const int out_ch = (i == n_stages - 1) ? cfg.feature_c : cfg.encoder_width;
    total += std::int64_t(out_ch) * in_ch * 3 * 3 + out_ch;
    in_ch = out_ch;
  }
  return total;
}

int resolve_base_width(const ModelConfig& cfg) {
  if (cfg.target_params <= 0) {
    throw ShapeError("width search: target_params must be positive");
  }
  // decoder_param_count is strictly increasing in base_width, so scan until
  // the count passes the target and keep the closest width.
  constexpr int kMaxWidth = 1 << 14;
  int best_w = 1;
  double best_err = std::abs(double(decoder_param_count(cfg, 1)) -
                             cfg.target_params);
  std::int64_t below = decoder_param_count(cfg, 1);
  std::int64_t above = below;
  for (int w = 2; w <= kMaxWidth; ++w) {
    const std::int64_t count = decoder_param_count(cfg, w);
    const double err = std::abs(double(count) - cfg.target_params);
    if (err < best_err) {
      best_err = err;
      best_w = w;
    }
    if (double(count) < cfg.target_params) {
      below = count;
    } else {
      above = count;
      break;
    }
  }
  const std::int64_t realized = decoder_param_count(cfg, best_w);
  if (best_err > 0.05 * cfg.target_params) {
    throw ShapeError(
        "width search: no decoder width within 5% of target " +
        std::to_string(std::int64_t(cfg.target_params)) +
        " (nearest achievable counts: " + std::to_string(below) + " and " +
        std::to_string(above) + ")");
  }
  (void)realized;
  return best_w;
}

namespace {

void write_config(ByteWriter& w, const ModelConfig& cfg) {
  w.u8(std::uint8_t(cfg.variant));
  w.u32(std::uint32_t(cfg.feature_c));
  w.u32(std::uint32_t(cfg.feature_h));
  w.u32(std::uint32_t(cfg.feature_w));
  w.u32(std::uint32_t(cfg.stages.size()));
  for (const auto& s : cfg.stages) {
    w.u32(std::uint32_t(s.upsample));
    w.u32(std::uint32_t(s.kernel));
  }
  w.u32(std::uint32_t(cfg.base_width));
  w.f64(cfg.target_params);
  w.u32(std::uint32_t(cfg.encoder_width));
}

ModelConfig read_config(ByteReader& r) {
  ModelConfig cfg;
  cfg.variant = Variant(r.u8());
  if (cfg.variant != Variant::baseline && cfg.variant != Variant::residual) {
    r.fail("unknown variant");
  }
  cfg.feature_c = int(r.u32());
  cfg.feature_h = int(r.u32());
  cfg.feature_w = int(r.u32());
  const std::uint32_t n_stages = r.u32();
  if (n_stages == 0 || n_stages > 16) r.fail("implausible stage count");
  for (std::uint32_t i = 0; i < n_stages; ++i) {
    DecoderStage s;
    s.upsample = int(r.u32());
    s.kernel = int(r.u32());
    cfg.stages.push_back(s);
  }
  cfg.base_width = int(r.u32());
  cfg.target_params = r.f64();
  cfg.encoder_width = int(r.u32());
  return cfg;
}

}  // namespace

namespace detail_model {

void write_config_bytes(ByteWriter& w, const ModelConfig& cfg) {
  write_config(w, cfg);
}
ModelConfig read_config_bytes(ByteReader& r) { return read_config(r); }

}  // namespace detail_model

void save_checkpoint(const std::filesystem::path& path,
                     const Model<float>& m) {
  ByteWriter w;
  w.blob(kMagic, 4);
  w.u8(kKindCheckpoint);
  w.u8(1);  // version
  write_config(w, m.config);
  auto dump = [&w](const std::vector<Tensor<float>>& ts) {
    for (const auto& t : ts) {
      const Shape& s = t.shape();
      w.u32(std::uint32_t(s.n));
      w.u32(std::uint32_t(s.c));
      w.u32(std::uint32_t(s.h));
      w.u32(std::uint32_t(s.w));
      w.blob(t.value().data(), t.value().size() * sizeof(float));
    }
  };
  w.u32(std::uint32_t(m.enc_w.size()));
  w.u32(std::uint32_t(m.dec_w.size()));
  dump(m.enc_w);
  dump(m.enc_b);
  dump(m.dec_w);
  dump(m.dec_b);
  write_file_bytes(path.string(), w.bytes());
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path.string());
  ByteReader r({bytes.data(), bytes.size()}, "checkpoint " + path.string());
  const auto magic = r.blob(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail("bad magic");
  if (r.u8() != kKindCheckpoint) r.fail("not a checkpoint file");
  if (r.u8() != 1) r.fail("unsupported version");
  ModelConfig cfg = read_config(r);

  const std::uint32_t n_enc = r.u32();
  const std::uint32_t n_dec = r.u32();
  auto read_tensors = [&r](std::uint32_t count, const char* what) {
    std::vector<Tensor<float>> out;
    for (std::uint32_t i = 0; i < count; ++i) {
      r.set_section(std::string(what) + " tensor " + std::to_string(i));
      Shape s;
      s.n = int(r.u32());
      s.c = int(r.u32());
      s.h = int(r.u32());
      s.w = int(r.u32());
      if (s.numel() < 0 || s.numel() > (std::int64_t(1) << 32)) {
        r.fail("implausible tensor shape");
      }
      const auto raw = r.blob(std::size_t(s.numel()) * sizeof(float));
      std::vector<float> data(std::size_t(s.numel()));
      std::memcpy(data.data(), raw.data(), raw.size());
      out.push_back(Tensor<float>::from_data(s, std::move(data), true));
    }
    return out;
  };
  Model<float> m;
  m.config = cfg;
  m.enc_w = read_tensors(n_enc, "encoder weight");
  m.enc_b = read_tensors(n_enc, "encoder bias");
  m.dec_w = read_tensors(n_dec, "decoder weight");
  m.dec_b = read_tensors(n_dec, "decoder bias");
  return m;
}

}  // namespace rinr
