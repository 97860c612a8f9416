#include "rinr/quant.hpp"

#include <cstring>
#include <fstream>

namespace rinr {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError(path + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

namespace {

// MSB-first bit packing, per-blob byte alignment.
class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t value, int bits) {
    acc_ = (acc_ << bits) | (value & ((1u << bits) - 1u));
    nbits_ += bits;
    while (nbits_ >= 8) {
      out_.push_back(std::uint8_t((acc_ >> (nbits_ - 8)) & 0xFFu));
      nbits_ -= 8;
    }
  }

  void align() {
    if (nbits_ > 0) {
      out_.push_back(std::uint8_t((acc_ << (8 - nbits_)) & 0xFFu));
      nbits_ = 0;
    }
    acc_ = 0;
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint32_t acc_ = 0;
  int nbits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint32_t get(int bits) {
    while (nbits_ < bits) {
      acc_ = (acc_ << 8) | data_[byte_++];
      nbits_ += 8;
    }
    const std::uint32_t v = (acc_ >> (nbits_ - bits)) & ((1u << bits) - 1u);
    nbits_ -= bits;
    return v;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t byte_ = 0;
  std::uint32_t acc_ = 0;
  int nbits_ = 0;
};

std::size_t blob_payload_bytes(const QuantizedBlob& b) {
  return std::size_t((b.payload_bits() + 7) / 8);
}

void write_blob(ByteWriter& w, const QuantizedBlob& b) {
  w.u32(std::uint32_t(b.shape.n));
  w.u32(std::uint32_t(b.shape.c));
  w.u32(std::uint32_t(b.shape.h));
  w.u32(std::uint32_t(b.shape.w));
  w.u8(std::uint8_t(b.bits));
  w.f64(b.min_val);
  w.f64(b.scale);
  w.u32(std::uint32_t(blob_payload_bytes(b)));
  BitWriter bits(w.bytes());
  for (const std::uint16_t c : b.codes) bits.put(c, b.bits);
  bits.align();
}

QuantizedBlob read_blob(ByteReader& r) {
  QuantizedBlob b;
  b.shape.n = int(r.u32());
  b.shape.c = int(r.u32());
  b.shape.h = int(r.u32());
  b.shape.w = int(r.u32());
  b.bits = int(r.u8());
  if (b.bits < 1 || b.bits > 16) r.fail("invalid bit width");
  if (b.shape.numel() < 0 || b.shape.numel() > (std::int64_t(1) << 32)) {
    r.fail("implausible blob shape");
  }
  b.min_val = r.f64();
  b.scale = r.f64();
  const std::uint32_t payload_bytes = r.u32();
  b.codes.resize(std::size_t(b.shape.numel()));
  const std::size_t expect = blob_payload_bytes(b);
  if (payload_bytes != expect) r.fail("payload size mismatch");
  const auto payload = r.blob(payload_bytes);
  BitReader bits(payload);
  const std::uint32_t qmax = b.qmax();
  for (auto& c : b.codes) {
    const std::uint32_t v = bits.get(b.bits);
    if (v > qmax) r.fail("code exceeds bit width");
    c = std::uint16_t(v);
  }
  return b;
}

}  // namespace

std::vector<std::uint8_t> pack(const CompressedVideo& cv) {
  ByteWriter w;
  w.blob(kMagic, 4);
  w.u8(kKindCompressed);
  w.u8(1);  // version
  w.u8(std::uint8_t(cv.variant));
  w.u8(std::uint8_t(cv.bit_depth));
  w.u32(std::uint32_t(cv.frame_h));
  w.u32(std::uint32_t(cv.frame_w));
  w.u32(std::uint32_t(cv.frame_count));
  w.u32(std::uint32_t(cv.scale_n));
  w.u8(std::uint8_t(cv.feature_bits));
  w.u8(std::uint8_t(cv.model_bits));
  w.u16(0);  // reserved
  detail_model::write_config_bytes(w, cv.model_config);
  w.u32(std::uint32_t(cv.decoder_blobs.size()));
  const std::size_t size_field_at = w.size();
  w.u64(0);  // total byte length, patched below

  for (const auto& b : cv.decoder_blobs) write_blob(w, b);
  for (const auto& b : cv.feature_blobs) write_blob(w, b);

  if (cv.variant == Variant::residual) {
    const ResidualStream& rs = cv.residual.value();
    // The stream is serialized as one byte per sample, so the stored bit
    // depth must be 8 for the size accounting to hold. The low-res dims are
    // not stored: they are frame dims / n.
    if (cv.bit_depth != 8) {
      throw std::invalid_argument(
          "pack: residual stream requires bit_depth 8, got " +
          std::to_string(cv.bit_depth));
    }
    if (rs.lr_h != cv.frame_h / cv.scale_n || rs.lr_w != cv.frame_w / cv.scale_n) {
      throw std::invalid_argument("pack: residual stream dims do not match "
                                  "frame dims / scale n");
    }
    for (const auto& f : rs.frames) w.blob(f.data(), f.size());
  }
  w.patch_u64(size_field_at, w.size());
  return std::move(w.bytes());
}

CompressedVideo unpack(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "compressed video");
  CompressedVideo cv;
  const auto magic = r.blob(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail("bad magic");
  if (r.u8() != kKindCompressed) r.fail("not a compressed video");
  if (r.u8() != 1) r.fail("unsupported version");
  cv.variant = Variant(r.u8());
  if (cv.variant != Variant::baseline && cv.variant != Variant::residual) {
    r.fail("unknown variant");
  }
  cv.bit_depth = int(r.u8());
  cv.frame_h = int(r.u32());
  cv.frame_w = int(r.u32());
  cv.frame_count = int(r.u32());
  cv.scale_n = int(r.u32());
  cv.feature_bits = int(r.u8());
  cv.model_bits = int(r.u8());
  r.u16();  // reserved
  cv.model_config = detail_model::read_config_bytes(r);
  const std::uint32_t n_dec = r.u32();
  const std::uint64_t declared_size = r.u64();
  if (cv.frame_count < 1 || cv.frame_count > (1 << 20)) {
    r.fail("implausible frame count");
  }

  for (std::uint32_t i = 0; i < n_dec; ++i) {
    r.set_section("decoder blob " + std::to_string(i));
    cv.decoder_blobs.push_back(read_blob(r));
  }
  for (int t = 0; t < cv.frame_count; ++t) {
    r.set_section("feature blob (frame " + std::to_string(t) + ")");
    cv.feature_blobs.push_back(read_blob(r));
  }
  if (cv.variant == Variant::residual) {
    r.set_section("residual stream");
    ResidualStream rs;
    rs.config.n = cv.scale_n;
    rs.config.bit_depth = cv.bit_depth;
    if (cv.scale_n < 1 || cv.frame_h % cv.scale_n != 0 ||
        cv.frame_w % cv.scale_n != 0) {
      r.fail("frame dims not divisible by scale n");
    }
    rs.lr_h = cv.frame_h / cv.scale_n;
    rs.lr_w = cv.frame_w / cv.scale_n;
    const std::size_t per_frame = std::size_t(3) * rs.lr_h * rs.lr_w;
    for (int t = 0; t < cv.frame_count; ++t) {
      r.set_section("residual stream (frame " + std::to_string(t) + ")");
      const auto raw = r.blob(per_frame);
      rs.frames.emplace_back(raw.begin(), raw.end());
    }
    cv.residual = std::move(rs);
  }
  // Size bookkeeping is validated last so that a truncation inside a section
  // is reported against that section, not against the header field.
  r.set_section("trailer");
  if (r.remaining() != 0) r.fail("trailing bytes");
  if (declared_size != bytes.size()) {
    r.set_section("header");
    r.fail("declared size " + std::to_string(declared_size) +
           " does not match stream length " + std::to_string(bytes.size()));
  }
  return cv;
}

BppBreakdown bpp_breakdown(const CompressedVideo& cv) {
  BppBreakdown out;
  const double pixels =
      double(cv.frame_count) * double(cv.frame_h) * double(cv.frame_w);
  std::int64_t decoder_bits = 0;
  for (const auto& b : cv.decoder_blobs) decoder_bits += b.payload_bits();
  std::int64_t feature_bits = 0;
  for (const auto& b : cv.feature_blobs) feature_bits += b.payload_bits();
  std::int64_t residual_bits = 0;
  if (cv.residual) {
    for (const auto& f : cv.residual->frames) {
      residual_bits += std::int64_t(f.size()) * cv.bit_depth;
    }
  }
  const std::int64_t total_bits = std::int64_t(pack(cv).size()) * 8;
  out.decoder = double(decoder_bits) / pixels;
  out.features = double(feature_bits) / pixels;
  out.residual = double(residual_bits) / pixels;
  out.header =
      double(total_bits - decoder_bits - feature_bits - residual_bits) /
      pixels;
  out.total = double(total_bits) / pixels;
  return out;
}

double total_bpp(const CompressedVideo& cv) { return bpp_breakdown(cv).total; }

}  // namespace rinr
