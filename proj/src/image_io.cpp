#include "rinr/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "rinr/io_util.hpp"
#include "rinr/residual.hpp"

namespace rinr {

namespace {

int read_pnm_int(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments.
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) {
    throw IoError(path + ": malformed PPM header");
  }
  int value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return value;
}

std::uint8_t to_byte(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return std::uint8_t(std::lround(double(c) * 255.0));
}

}  // namespace

Tensor<float> read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '6') {
    throw IoError(path.string() + ": not a binary PPM (P6)");
  }
  const int w = read_pnm_int(in, path.string());
  const int h = read_pnm_int(in, path.string());
  const int maxval = read_pnm_int(in, path.string());
  if (maxval != 255) {
    throw IoError(path.string() + ": unsupported maxval " +
                  std::to_string(maxval));
  }
  in.get();  // single whitespace byte before the raster
  std::vector<std::uint8_t> raster(std::size_t(3) * w * h);
  in.read(reinterpret_cast<char*>(raster.data()),
          std::streamsize(raster.size()));
  if (std::size_t(in.gcount()) != raster.size()) {
    throw IoError(path.string() + ": truncated raster");
  }
  std::vector<float> data(raster.size());
  // Interleaved RGB rows to planar CHW.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        data[(std::size_t(c) * h + y) * w + x] =
            float(raster[(std::size_t(y) * w + x) * 3 + c]) / 255.0f;
      }
    }
  }
  return Tensor<float>::from_data({1, 3, h, w}, std::move(data));
}

void write_ppm(const std::filesystem::path& path, const Tensor<float>& frame) {
  const Shape& s = frame.shape();
  if (s.n != 1 || s.c != 3) {
    throw IoError("write_ppm: expected (1,3,H,W), got " + s.str());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "P6\n" << s.w << ' ' << s.h << "\n255\n";
  const auto v = frame.value();
  std::vector<std::uint8_t> raster(std::size_t(3) * s.h * s.w);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        raster[(std::size_t(y) * s.w + x) * 3 + c] =
            to_byte(v[(std::size_t(c) * s.h + y) * s.w + x]);
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            std::streamsize(raster.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

Tensor<float> read_raw(const std::filesystem::path& path) {
  std::filesystem::path dims_path = path;
  dims_path += ".dims";
  std::ifstream dims(dims_path);
  if (!dims) throw IoError(dims_path.string() + ": missing dims sidecar");
  int c = 0, h = 0, w = 0;
  dims >> c >> h >> w;
  if (!dims || c < 1 || h < 1 || w < 1) {
    throw IoError(dims_path.string() + ": malformed dims sidecar");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::vector<float> data(std::size_t(c) * h * w);
  in.read(reinterpret_cast<char*>(data.data()),
          std::streamsize(data.size() * sizeof(float)));
  if (std::size_t(in.gcount()) != data.size() * sizeof(float)) {
    throw IoError(path.string() + ": truncated raw data");
  }
  return Tensor<float>::from_data({1, c, h, w}, std::move(data));
}

void write_raw(const std::filesystem::path& path, const Tensor<float>& frame) {
  const Shape& s = frame.shape();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  const auto v = frame.value();
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(float)));
  std::filesystem::path dims_path = path;
  dims_path += ".dims";
  std::ofstream dims(dims_path, std::ios::trunc);
  dims << s.c << ' ' << s.h << ' ' << s.w << '\n';
  if (!out || !dims) throw IoError(path.string() + ": write failed");
}

std::vector<std::filesystem::path> list_frames(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError(dir.string() + ": not a directory");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".ppm" || ext == ".raw") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FrameSequence read_frame_dir(const std::filesystem::path& dir) {
  FrameSequence seq;
  seq.source_id = dir.filename().string();
  // When a frame exists in both formats, the lossless .raw wins.
  std::map<std::string, std::filesystem::path> by_stem;
  for (const auto& p : list_frames(dir)) {
    auto& slot = by_stem[p.stem().string()];
    if (slot.empty() || p.extension() == ".raw") slot = p;
  }
  for (const auto& [stem, p] : by_stem) {
    seq.frames.push_back(p.extension() == ".raw" ? read_raw(p) : read_ppm(p));
    if (seq.frames.back().shape() != seq.frames.front().shape()) {
      throw IoError(p.string() + ": frame dims " +
                    seq.frames.back().shape().str() +
                    " differ from first frame " +
                    seq.frames.front().shape().str());
    }
  }
  if (seq.frames.empty()) throw IoError(dir.string() + ": no frames found");
  return seq;
}

void write_frame_dir(const std::filesystem::path& dir,
                     const std::vector<Tensor<float>>& frames, bool also_raw) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", i);
    write_ppm(dir / name, frames[i]);
    if (also_raw) {
      std::snprintf(name, sizeof(name), "frame_%04zu.raw", i);
      write_raw(dir / name, frames[i]);
    }
  }
}

FrameSequence center_crop(const FrameSequence& seq, int crop_h, int crop_w) {
  if (crop_h > seq.height() || crop_w > seq.width()) {
    throw IoError("crop " + std::to_string(crop_h) + "x" +
                  std::to_string(crop_w) + " exceeds frame " +
                  std::to_string(seq.height()) + "x" +
                  std::to_string(seq.width()));
  }
  const int y0 = (seq.height() - crop_h) / 2;
  const int x0 = (seq.width() - crop_w) / 2;
  FrameSequence out;
  out.source_id = seq.source_id;
  for (const auto& f : seq.frames) {
    const Shape& s = f.shape();
    const auto v = f.value();
    std::vector<float> data(std::size_t(s.c) * crop_h * crop_w);
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < crop_h; ++y) {
        std::memcpy(&data[(std::size_t(c) * crop_h + y) * crop_w],
                    &v[(std::size_t(c) * s.h + y0 + y) * s.w + x0],
                    std::size_t(crop_w) * sizeof(float));
      }
    }
    out.frames.push_back(
        Tensor<float>::from_data({1, s.c, crop_h, crop_w}, std::move(data)));
  }
  return out;
}

template <typename T>
void dump_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  ByteWriter w;
  const Shape& s = t.shape();
  w.u32(std::uint32_t(s.n));
  w.u32(std::uint32_t(s.c));
  w.u32(std::uint32_t(s.h));
  w.u32(std::uint32_t(s.w));
  for (const T v : t.value()) w.f32(float(v));
  write_file_bytes(path.string(), w.bytes());
}

template void dump_tensor<float>(const std::filesystem::path&,
                                 const Tensor<float>&);
template void dump_tensor<double>(const std::filesystem::path&,
                                  const Tensor<double>&);

Tensor<float> load_tensor_dump(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path.string());
  ByteReader r({bytes.data(), bytes.size()}, "tensor dump " + path.string());
  Shape s;
  s.n = int(r.u32());
  s.c = int(r.u32());
  s.h = int(r.u32());
  s.w = int(r.u32());
  std::vector<float> data(std::size_t(s.numel()));
  for (auto& v : data) v = r.f32();
  return Tensor<float>::from_data(s, std::move(data));
}

void save_features(const std::filesystem::path& path,
                   const std::vector<Tensor<float>>& features) {
  ByteWriter w;
  w.blob(kMagic, 4);
  w.u8(kKindFeatures);
  w.u8(1);
  w.u32(std::uint32_t(features.size()));
  for (const auto& f : features) {
    const Shape& s = f.shape();
    w.u32(std::uint32_t(s.n));
    w.u32(std::uint32_t(s.c));
    w.u32(std::uint32_t(s.h));
    w.u32(std::uint32_t(s.w));
    w.blob(f.value().data(), f.value().size() * sizeof(float));
  }
  write_file_bytes(path.string(), w.bytes());
}

std::vector<Tensor<float>> load_features(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path.string());
  ByteReader r({bytes.data(), bytes.size()}, "features " + path.string());
  const auto magic = r.blob(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail("bad magic");
  if (r.u8() != kKindFeatures) r.fail("not a features file");
  if (r.u8() != 1) r.fail("unsupported version");
  const std::uint32_t count = r.u32();
  std::vector<Tensor<float>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    r.set_section("feature " + std::to_string(i));
    Shape s;
    s.n = int(r.u32());
    s.c = int(r.u32());
    s.h = int(r.u32());
    s.w = int(r.u32());
    if (s.numel() < 0 || s.numel() > (std::int64_t(1) << 30)) {
      r.fail("implausible feature shape");
    }
    const auto raw = r.blob(std::size_t(s.numel()) * sizeof(float));
    std::vector<float> data(std::size_t(s.numel()));
    std::memcpy(data.data(), raw.data(), raw.size());
    out.push_back(Tensor<float>::from_data(s, std::move(data)));
  }
  return out;
}

void save_residual_stream(const std::filesystem::path& path,
                          const ResidualStream& stream) {
  ByteWriter w;
  w.blob(kMagic, 4);
  w.u8(kKindResidualStream);
  w.u8(1);
  w.u32(std::uint32_t(stream.config.n));
  w.u8(std::uint8_t(stream.config.bit_depth));
  w.u32(std::uint32_t(stream.lr_h));
  w.u32(std::uint32_t(stream.lr_w));
  w.u32(std::uint32_t(stream.frames.size()));
  for (const auto& f : stream.frames) w.blob(f.data(), f.size());
  write_file_bytes(path.string(), w.bytes());
}

ResidualStream load_residual_stream(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path.string());
  ByteReader r({bytes.data(), bytes.size()},
               "residual stream " + path.string());
  const auto magic = r.blob(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail("bad magic");
  if (r.u8() != kKindResidualStream) r.fail("not a residual stream file");
  if (r.u8() != 1) r.fail("unsupported version");
  ResidualStream s;
  s.config.n = int(r.u32());
  s.config.bit_depth = int(r.u8());
  s.lr_h = int(r.u32());
  s.lr_w = int(r.u32());
  const std::uint32_t count = r.u32();
  const std::size_t per_frame = std::size_t(3) * s.lr_h * s.lr_w;
  for (std::uint32_t i = 0; i < count; ++i) {
    r.set_section("frame " + std::to_string(i));
    const auto raw = r.blob(per_frame);
    s.frames.emplace_back(raw.begin(), raw.end());
  }
  return s;
}

}  // namespace rinr
