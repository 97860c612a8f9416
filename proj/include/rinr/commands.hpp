#pragma once

// Pipeline commands behind the CLI subcommands. Tests drive these directly;
// tools/rinr_main.cpp only parses flags and forwards here.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "rinr/metrics.hpp"
#include "rinr/quant.hpp"
#include "rinr/synth.hpp"
#include "rinr/train.hpp"

namespace rinr {

inline constexpr const char* kCheckpointFile = "checkpoint.rinr";
inline constexpr const char* kFeaturesFile = "features.rinr";
inline constexpr const char* kResidualFile = "residual.rinr";

struct TrainOptions {
  RunConfig run;
  double model_size = 50000.0;  // target decoder parameter count
  int feature_ch = 16;
  int down_factor = 32;
  int crop_h = 0, crop_w = 0;  // 0 = no crop
};

// key=value lines; '#' starts a comment. Returns keys it consumed.
void apply_config_file(const std::filesystem::path& path, TrainOptions& opts);

void cmd_synth(SynthKind kind, int frame_count, int height, int width,
               std::uint32_t seed, const std::filesystem::path& out_dir,
               int divisor = 32);

TrainResult cmd_train(const TrainOptions& opts,
                      const std::filesystem::path& frames_dir,
                      const std::filesystem::path& out_dir,
                      std::ostream* log = nullptr);

// Quantizes the trained artifacts in train_dir and packs the container.
CompressedVideo cmd_compress(const std::filesystem::path& train_dir,
                             const std::filesystem::path& out_file,
                             int feature_bits, int model_bits,
                             std::ostream* log = nullptr);

// In-memory decode used by cmd_decode, the RD sweep and tests.
std::vector<Tensor<float>> decode_container(const CompressedVideo& cv);

void cmd_decode(const std::filesystem::path& in_file,
                const std::filesystem::path& out_dir, bool also_raw = false);

MetricReport cmd_eval(const std::filesystem::path& recon_dir,
                      const std::filesystem::path& orig_dir,
                      const std::filesystem::path& csv_path,
                      const std::string& video_id = "");

struct RdCell {
  std::string variant;
  double size_mult = 0.0;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double ms_ssim = 0.0;
  std::string status = "ok";
};

// Full sweep: train -> compress -> decode -> eval per (variant, size).
// Failures are recorded per cell and the sweep continues.
std::vector<RdCell> cmd_rd_sweep(const TrainOptions& base,
                                 const std::filesystem::path& frames_dir,
                                 const std::vector<double>& sizes,
                                 const std::vector<Variant>& variants,
                                 const std::filesystem::path& out_csv,
                                 const std::filesystem::path& workdir,
                                 std::ostream* log = nullptr);

}  // namespace rinr
