// End-to-end pipeline tests on tiny configurations: train -> compress ->
// decode -> eval, determinism, and the decoder-only decode contract.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rinr/commands.hpp"
#include "rinr/io_util.hpp"
#include "rinr/metrics.hpp"

namespace fs = std::filesystem;
using rinr::Tensor;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

rinr::TrainOptions tiny_options(rinr::Variant variant, std::uint32_t seed) {
  rinr::TrainOptions opts;
  opts.run.variant = variant;
  opts.run.scale_n = 8;
  opts.run.epochs = 6;
  opts.run.seed = seed;
  opts.model_size = 4000.0;
  opts.feature_ch = 4;
  opts.down_factor = 16;
  return opts;
}

}  // namespace

TEST_CASE("pipeline: deterministic artifacts for a fixed seed") {
  TempDir dir("rinr_pipe_det");
  rinr::cmd_synth(rinr::SynthKind::rects, 3, 32, 32, 9, dir.path / "frames",
                  16);
  const auto opts = tiny_options(rinr::Variant::residual, 5);
  rinr::cmd_train(opts, dir.path / "frames", dir.path / "t1");
  rinr::cmd_train(opts, dir.path / "frames", dir.path / "t2");
  for (const char* f :
       {rinr::kCheckpointFile, rinr::kFeaturesFile, rinr::kResidualFile}) {
    CHECK(rinr::read_file_bytes((dir.path / "t1" / f).string()) ==
          rinr::read_file_bytes((dir.path / "t2" / f).string()));
  }
  rinr::cmd_compress(dir.path / "t1", dir.path / "v1.rinr", 6, 8);
  rinr::cmd_compress(dir.path / "t2", dir.path / "v2.rinr", 6, 8);
  CHECK(rinr::read_file_bytes((dir.path / "v1.rinr").string()) ==
        rinr::read_file_bytes((dir.path / "v2.rinr").string()));

  rinr::cmd_decode(dir.path / "v1.rinr", dir.path / "r1");
  rinr::cmd_decode(dir.path / "v1.rinr", dir.path / "r2");
  const auto f1 = rinr::list_frames(dir.path / "r1");
  const auto f2 = rinr::list_frames(dir.path / "r2");
  REQUIRE(f1.size() == 3);
  for (std::size_t i = 0; i < f1.size(); ++i) {
    CHECK(rinr::read_file_bytes(f1[i].string()) ==
          rinr::read_file_bytes(f2[i].string()));
  }
}

TEST_CASE("pipeline: decoder-only decode survives deleting the originals") {
  TempDir dir("rinr_pipe_del");
  rinr::cmd_synth(rinr::SynthKind::balls, 3, 32, 32, 11, dir.path / "frames",
                  16);
  const auto opts = tiny_options(rinr::Variant::residual, 2);
  rinr::cmd_train(opts, dir.path / "frames", dir.path / "train");
  rinr::cmd_compress(dir.path / "train", dir.path / "v.rinr", 6, 8);
  fs::remove_all(dir.path / "frames");
  fs::remove_all(dir.path / "train");
  rinr::cmd_decode(dir.path / "v.rinr", dir.path / "recon");
  CHECK(rinr::list_frames(dir.path / "recon").size() == 3);
}

TEST_CASE("pipeline: zeroed decoder reproduces the bicubic low-res path") {
  TempDir dir("rinr_pipe_zero");
  rinr::cmd_synth(rinr::SynthKind::gratings, 2, 32, 32, 13,
                  dir.path / "frames", 16);
  const auto opts = tiny_options(rinr::Variant::residual, 3);
  const auto trained =
      rinr::cmd_train(opts, dir.path / "frames", dir.path / "train");
  rinr::cmd_compress(dir.path / "train", dir.path / "v.rinr", 6, 8);

  auto bytes = rinr::read_file_bytes((dir.path / "v.rinr").string());
  auto cv = rinr::unpack({bytes.data(), bytes.size()});

  // the decode-side residual base is bit-identical to the one training used
  for (std::size_t t = 0; t < 2; ++t) {
    auto decode_side = rinr::lowres_base<float>(*cv.residual, t, 32, 32);
    const auto train_side = trained.lowres_bases[t].value();
    CHECK(std::equal(train_side.begin(), train_side.end(),
                     decode_side.value().begin()));
  }

  for (auto& blob : cv.decoder_blobs) {
    blob.min_val = 0.0;
    blob.scale = 1.0;
    std::fill(blob.codes.begin(), blob.codes.end(), std::uint16_t(0));
  }
  const auto frames = rinr::decode_container(cv);
  REQUIRE(frames.size() == 2);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    auto y_lr = rinr::lowres_base<float>(*cv.residual, t, 32, 32);
    auto expect = rinr::reconstruct(y_lr, Tensor<float>::zeros(y_lr.shape()));
    for (std::int64_t i = 0; i < expect.numel(); ++i) {
      CHECK(frames[t].value()[i] == expect.value()[i]);
    }
  }
}

TEST_CASE("train: divergence aborts with the epoch number") {
  auto seq = rinr::make_sequence(rinr::SynthKind::balls, 2, 16, 16, 3);
  rinr::RunConfig run;
  run.variant = rinr::Variant::residual;  // linear head, loss can overflow
  run.scale_n = 1;
  run.epochs = 50;
  run.lr = 1e8;  // guaranteed blow-up
  run.seed = 1;
  run.model = rinr::ModelConfig::for_frame(16, 16, 4, 16);
  run.model.base_width = 8;
  CHECK_THROWS_WITH_AS(rinr::train(run, seq), doctest::Contains("epoch"),
                       rinr::TrainDivergence);
}

TEST_CASE("compress/eval: missing or mismatched inputs are rejected") {
  TempDir dir("rinr_pipe_missing");
  fs::create_directories(dir.path / "empty");
  CHECK_THROWS_WITH_AS(
      rinr::cmd_compress(dir.path / "empty", dir.path / "v.rinr", 6, 8),
      doctest::Contains("missing trained artifacts"), rinr::IoError);

  rinr::cmd_synth(rinr::SynthKind::rects, 2, 32, 32, 1, dir.path / "a", 16);
  rinr::cmd_synth(rinr::SynthKind::rects, 3, 32, 32, 1, dir.path / "b", 16);
  CHECK_THROWS_WITH_AS(rinr::cmd_eval(dir.path / "a", dir.path / "b", "", ""),
                       doctest::Contains("frame count"),
                       std::invalid_argument);
  rinr::cmd_synth(rinr::SynthKind::rects, 2, 16, 16, 1, dir.path / "c", 16);
  CHECK_THROWS_WITH_AS(rinr::cmd_eval(dir.path / "a", dir.path / "c", "", ""),
                       doctest::Contains("dims"), std::invalid_argument);
}

TEST_CASE("rd-sweep: a failing cell is recorded and the sweep continues") {
  TempDir dir("rinr_pipe_sweep_fail");
  rinr::cmd_synth(rinr::SynthKind::rects, 2, 32, 32, 41, dir.path / "frames",
                  16);
  auto opts = tiny_options(rinr::Variant::residual, 9);
  opts.run.epochs = 2;
  // size multiplier so small that the width search cannot land within 5%
  const auto cells = rinr::cmd_rd_sweep(opts, dir.path / "frames",
                                        {0.001, 1.0}, {rinr::Variant::residual},
                                        "", dir.path / "work");
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].status.find("error:") == 0);
  CHECK(cells[1].status == "ok");
}

TEST_CASE("pipeline: decode matches the eval report on written frames") {
  TempDir dir("rinr_pipe_eval");
  rinr::cmd_synth(rinr::SynthKind::rects, 3, 32, 32, 17, dir.path / "frames",
                  16);
  const auto opts = tiny_options(rinr::Variant::baseline, 4);
  rinr::cmd_train(opts, dir.path / "frames", dir.path / "train");
  rinr::cmd_compress(dir.path / "train", dir.path / "v.rinr", 6, 8);
  rinr::cmd_decode(dir.path / "v.rinr", dir.path / "recon");
  const auto report = rinr::cmd_eval(dir.path / "recon", dir.path / "frames",
                                     dir.path / "report.csv", "tiny");

  // recompute PSNR from the same files; the report must agree to 1e-6 dB
  auto recon = rinr::read_frame_dir(dir.path / "recon");
  auto orig = rinr::read_frame_dir(dir.path / "frames");
  double acc = 0.0;
  for (int t = 0; t < recon.count(); ++t) {
    acc += rinr::psnr(recon.frames[std::size_t(t)],
                      orig.frames[std::size_t(t)], 1.0);
  }
  CHECK(std::abs(report.mean_psnr_db - acc / 3.0) < 1e-6);

  // CSV: header + T + summary, summary equals the per-frame mean
  std::ifstream csv(dir.path / "report.csv");
  std::string line;
  std::getline(csv, line);
  double psum = 0.0;
  int rows = 0;
  std::string last;
  while (std::getline(csv, line)) {
    ++rows;
    last = line;
    if (rows <= 3) {
      const auto p1 = line.find(',', line.find(',') + 1);
      psum += std::stod(line.substr(p1 + 1, line.find(',', p1 + 1) - p1 - 1));
    }
  }
  CHECK(rows == 4);  // 3 frames + summary
  const auto p1 = last.find(",mean,");
  REQUIRE(p1 != std::string::npos);
  const double mean_in_csv = std::stod(last.substr(p1 + 6));
  CHECK(mean_in_csv == doctest::Approx(psum / 3.0).epsilon(1e-6));

  // identity eval: recon == orig gives inf / 1.0
  const auto self_report = rinr::cmd_eval(dir.path / "frames",
                                          dir.path / "frames", "", "self");
  CHECK(std::isinf(self_report.mean_psnr_db));
  CHECK(self_report.mean_ms_ssim == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pipeline: epoch-0 loss equals an independent initial evaluation") {
  TempDir dir("rinr_pipe_epoch0");
  rinr::cmd_synth(rinr::SynthKind::balls, 2, 32, 32, 19, dir.path / "frames",
                  16);
  auto frames = rinr::read_frame_dir(dir.path / "frames");

  rinr::RunConfig run;
  run.variant = rinr::Variant::residual;
  run.scale_n = 8;
  run.epochs = 1;
  run.seed = 77;
  run.model = rinr::ModelConfig::for_frame(32, 32, 4, 16);
  run.model.target_params = 4000.0;
  const auto result = rinr::train(run, frames);

  // rebuild the same initialized model and evaluate the loss independently
  auto cfg = run.model;
  cfg.variant = run.variant;
  auto model = rinr::build_model<float>(cfg, run.seed);
  rinr::ResidualConfig rc;
  rc.n = run.scale_n;
  auto stream = rinr::build_residual_stream(frames.frames, rc);
  double acc = 0.0;
  for (std::size_t t = 0; t < frames.frames.size(); ++t) {
    auto y_lr = rinr::lowres_base<float>(stream, t, 32, 32);
    auto out = rinr::decoder_forward(
        model, rinr::encoder_forward(model, frames.frames[t]));
    auto pre = rinr::add(y_lr, out);
    acc += double(rinr::mse_loss(pre, frames.frames[t]).item());
  }
  CHECK(result.epoch0_loss == doctest::Approx(acc / 2.0).epsilon(1e-12));
}

TEST_CASE("residual with n=1 hits the 8-bit noise floor with a zero decoder") {
  auto seq = rinr::make_sequence(rinr::SynthKind::balls, 2, 16, 16, 23);
  rinr::ResidualConfig rc;
  rc.n = 1;
  auto stream = rinr::build_residual_stream(seq.frames, rc);
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    auto y_lr = rinr::lowres_base<float>(stream, t, 16, 16);
    auto recon = rinr::reconstruct(y_lr, Tensor<float>::zeros(y_lr.shape()));
    CHECK(rinr::psnr(recon, seq.frames[t], 1.0) >= 48.0);
  }
}

TEST_CASE("compress: breakdown lines, bytes-on-disk, baseline has no residual") {
  TempDir dir("rinr_pipe_compress");
  rinr::cmd_synth(rinr::SynthKind::rects, 2, 32, 32, 29, dir.path / "frames",
                  16);
  auto opts = tiny_options(rinr::Variant::residual, 6);
  rinr::cmd_train(opts, dir.path / "frames", dir.path / "train");
  std::ostringstream log;
  const auto cv =
      rinr::cmd_compress(dir.path / "train", dir.path / "v.rinr", 6, 8, &log);

  // reported byte count equals the file size on disk
  const auto logged = log.str();
  const auto bytes_at = logged.find("bytes ");
  REQUIRE(bytes_at != std::string::npos);
  const auto reported = std::stoull(logged.substr(bytes_at + 6));
  CHECK(reported == fs::file_size(dir.path / "v.rinr"));

  const auto bd = rinr::bpp_breakdown(cv);
  CHECK(bd.residual == rinr::bpp_residual(8, 8));
  CHECK(logged.find("bpp residual") != std::string::npos);

  auto base_opts = tiny_options(rinr::Variant::baseline, 6);
  rinr::cmd_train(base_opts, dir.path / "frames", dir.path / "train_base");
  const auto cv_base = rinr::cmd_compress(dir.path / "train_base",
                                          dir.path / "vb.rinr", 6, 8);
  CHECK(!cv_base.residual.has_value());
  CHECK(rinr::bpp_breakdown(cv_base).residual == 0.0);

  // accounting identity on the packed files: the byte delta is exactly the
  // residual stream, so the bpp gap equals bpp_residual
  const auto res_sz = double(fs::file_size(dir.path / "v.rinr"));
  const auto base_sz = double(fs::file_size(dir.path / "vb.rinr"));
  const double gap = (res_sz - base_sz) * 8.0 / (2.0 * 32.0 * 32.0);
  CHECK(gap == rinr::bpp_residual(8, 8));
}

TEST_CASE("compress: paper-scale residual bpp line at n=128") {
  TempDir dir("rinr_pipe_n128");
  rinr::cmd_synth(rinr::SynthKind::gratings, 2, 128, 128, 31,
                  dir.path / "frames", 128);
  rinr::TrainOptions opts;
  opts.run.variant = rinr::Variant::residual;
  opts.run.scale_n = 128;
  opts.run.epochs = 1;
  opts.run.seed = 1;
  opts.model_size = 20000.0;
  opts.feature_ch = 4;
  opts.down_factor = 32;
  rinr::cmd_train(opts, dir.path / "frames", dir.path / "train");
  const auto cv =
      rinr::cmd_compress(dir.path / "train", dir.path / "v.rinr", 6, 8);
  CHECK(rinr::bpp_breakdown(cv).residual == 0.00146484375);
}

TEST_CASE("rd-sweep: row cardinality, monotone bpp, exact residual gap") {
  TempDir dir("rinr_pipe_sweep");
  rinr::cmd_synth(rinr::SynthKind::balls, 2, 32, 32, 37, dir.path / "frames",
                  16);
  auto opts = tiny_options(rinr::Variant::residual, 8);
  opts.run.epochs = 2;
  const auto cells = rinr::cmd_rd_sweep(
      opts, dir.path / "frames", {1.0, 2.0},
      {rinr::Variant::baseline, rinr::Variant::residual},
      dir.path / "rd.csv", dir.path / "work");
  REQUIRE(cells.size() == 4);
  for (const auto& c : cells) CHECK(c.status == "ok");
  CHECK(cells[0].bpp < cells[1].bpp);  // baseline sizes 1 -> 2
  CHECK(cells[2].bpp < cells[3].bpp);  // residual sizes 1 -> 2

  // csv: header + 4 rows
  std::ifstream csv(dir.path / "rd.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "variant,size,bpp,psnr_db,ms_ssim,status");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);

  // gap at equal size from the packed files (integer byte math)
  const auto base_sz =
      double(fs::file_size(dir.path / "work" / "baseline_1.000000" /
                           "video.rinr"));
  const auto res_sz =
      double(fs::file_size(dir.path / "work" / "residual_1.000000" /
                           "video.rinr"));
  CHECK((res_sz - base_sz) * 8.0 / (2.0 * 32.0 * 32.0) ==
        rinr::bpp_residual(8, 8));
}
