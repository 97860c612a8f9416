#pragma once

// Little-endian byte-buffer helpers shared by the checkpoint, feature,
// residual-stream and compressed-container formats.

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rinr {

// Structured failure while decoding a serialized artifact; the message names
// the failing section.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ByteWriter {
 public:
  std::vector<std::uint8_t>& bytes() { return buf_; }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void blob(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  // Patches a previously written u64 at `offset`.
  void patch_u64(std::size_t offset, std::uint64_t v) {
    std::memcpy(buf_.data() + offset, &v, 8);
  }

 private:
  void raw(const void* p, std::size_t n) {
    // Host is little-endian on every supported target; memcpy keeps the
    // stores well-defined.
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void set_section(std::string s) { section_ = std::move(s); }

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint16_t u16() { return take<std::uint16_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  float f32() { return take<float>(); }
  double f64() { return take<double>(); }

  std::span<const std::uint8_t> blob(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw DecodeError(what_ + ": " + section_ + ": " + why);
  }

 private:
  template <typename V>
  V take() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) fail("truncated");
  }

  std::span<const std::uint8_t> data_;
  std::string what_;
  std::string section_ = "header";
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes);

// Shared artifact magic plus a per-format kind byte.
inline constexpr std::uint8_t kMagic[4] = {'R', 'I', 'N', 'R'};
inline constexpr std::uint8_t kKindCheckpoint = 1;
inline constexpr std::uint8_t kKindFeatures = 2;
inline constexpr std::uint8_t kKindCompressed = 3;
inline constexpr std::uint8_t kKindResidualStream = 4;

}  // namespace rinr
