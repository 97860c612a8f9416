#pragma once

// Frame file handling. Frames travel as binary PPM (P6, maxval 255); a raw
// float32 planar format (.raw plus a text .dims sidecar) is accepted for
// lossless intermediates. A directory of same-sized frames is a video.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rinr/tensor.hpp"

namespace rinr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameSequence {
  std::vector<Tensor<float>> frames;  // each (1,3,H,W) in [0,1]
  std::string source_id;

  int height() const { return frames.empty() ? 0 : frames[0].shape().h; }
  int width() const { return frames.empty() ? 0 : frames[0].shape().w; }
  int count() const { return int(frames.size()); }
};

// PPM P6, maxval 255. Written samples are round(clamp01(v) * 255).
Tensor<float> read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor<float>& frame);

// Raw float32 planar CHW with "<C> <H> <W>" in a .dims sidecar.
Tensor<float> read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const Tensor<float>& frame);

// Sorted frame files (*.ppm / *.raw) in a directory.
std::vector<std::filesystem::path> list_frames(
    const std::filesystem::path& dir);

FrameSequence read_frame_dir(const std::filesystem::path& dir);
void write_frame_dir(const std::filesystem::path& dir,
                     const std::vector<Tensor<float>>& frames,
                     bool also_raw = false);

FrameSequence center_crop(const FrameSequence& seq, int crop_h, int crop_w);

// Debug dump: four little-endian uint32 dims followed by float32 data.
template <typename T>
void dump_tensor(const std::filesystem::path& path, const Tensor<T>& t);
Tensor<float> load_tensor_dump(const std::filesystem::path& path);

// Per-frame features, concatenated tensor dumps with a small header.
void save_features(const std::filesystem::path& path,
                   const std::vector<Tensor<float>>& features);
std::vector<Tensor<float>> load_features(const std::filesystem::path& path);

struct ResidualStream;
void save_residual_stream(const std::filesystem::path& path,
                          const ResidualStream& stream);
ResidualStream load_residual_stream(const std::filesystem::path& path);

}  // namespace rinr
