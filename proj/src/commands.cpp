#include "rinr/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rinr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

ModelConfig resolved_model_config(const TrainOptions& opts, int frame_h,
                                  int frame_w) {
  ModelConfig cfg = ModelConfig::for_frame(frame_h, frame_w, opts.feature_ch,
                                           opts.down_factor);
  cfg.variant = opts.run.variant;
  cfg.target_params = opts.model_size;
  return cfg;
}

}  // namespace

void apply_config_file(const std::filesystem::path& path, TrainOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open config file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "variant") {
        if (value == "baseline") {
          opts.run.variant = Variant::baseline;
        } else if (value == "residual") {
          opts.run.variant = Variant::residual;
        } else {
          throw std::invalid_argument("variant must be baseline or residual");
        }
      } else if (key == "scale_n") {
        opts.run.scale_n = std::stoi(value);
      } else if (key == "epochs") {
        opts.run.epochs = std::stoi(value);
      } else if (key == "lr") {
        opts.run.lr = std::stod(value);
      } else if (key == "seed") {
        opts.run.seed = std::uint32_t(std::stoul(value));
      } else if (key == "feature_bits") {
        opts.run.feature_bits = std::stoi(value);
      } else if (key == "model_bits") {
        opts.run.model_bits = std::stoi(value);
      } else if (key == "model_size") {
        opts.model_size = std::stod(value);
      } else if (key == "feature_ch") {
        opts.feature_ch = std::stoi(value);
      } else if (key == "down_factor") {
        opts.down_factor = std::stoi(value);
      } else {
        throw std::invalid_argument("unknown key");
      }
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " +
                    key + ": " + e.what());
    }
  }
}

void cmd_synth(SynthKind kind, int frame_count, int height, int width,
               std::uint32_t seed, const std::filesystem::path& out_dir,
               int divisor) {
  if (divisor > 0 && (height % divisor != 0 || width % divisor != 0)) {
    throw std::invalid_argument(
        "synth: dims " + std::to_string(height) + "x" + std::to_string(width) +
        " must be divisible by " + std::to_string(divisor) +
        " (the model's total upsample factor / resize scale; override with" +
        " --divisor)");
  }
  FrameSequence seq = make_sequence(kind, frame_count, height, width, seed);
  write_frame_dir(out_dir, seq.frames);
}

TrainResult cmd_train(const TrainOptions& opts,
                      const std::filesystem::path& frames_dir,
                      const std::filesystem::path& out_dir,
                      std::ostream* log) {
  FrameSequence frames = read_frame_dir(frames_dir);
  if (opts.crop_h > 0 && opts.crop_w > 0) {
    frames = center_crop(frames, opts.crop_h, opts.crop_w);
  }

  RunConfig run = opts.run;
  run.model = resolved_model_config(opts, frames.height(), frames.width());

  TrainResult result = train(run, frames, log);

  std::filesystem::create_directories(out_dir);
  save_checkpoint(out_dir / kCheckpointFile, result.model);
  save_features(out_dir / kFeaturesFile, result.features);
  if (result.residual) {
    save_residual_stream(out_dir / kResidualFile, *result.residual);
  }
  return result;
}

CompressedVideo cmd_compress(const std::filesystem::path& train_dir,
                             const std::filesystem::path& out_file,
                             int feature_bits, int model_bits,
                             std::ostream* log) {
  const auto ckpt_path = train_dir / kCheckpointFile;
  const auto feat_path = train_dir / kFeaturesFile;
  if (!std::filesystem::exists(ckpt_path) ||
      !std::filesystem::exists(feat_path)) {
    throw IoError("compress: missing trained artifacts in " +
                  train_dir.string() + " (expected " +
                  std::string(kCheckpointFile) + " and " +
                  std::string(kFeaturesFile) + ")");
  }
  Model<float> model = load_checkpoint(ckpt_path);
  std::vector<Tensor<float>> features = load_features(feat_path);

  CompressedVideo cv;
  cv.variant = model.config.variant;
  cv.frame_h = model.config.frame_h();
  cv.frame_w = model.config.frame_w();
  cv.frame_count = int(features.size());
  cv.feature_bits = feature_bits;
  cv.model_bits = model_bits;
  cv.model_config = model.config;

  for (const auto& t : model.dec_w) {
    cv.decoder_blobs.push_back(quantize_tensor(t, model_bits));
  }
  for (const auto& t : model.dec_b) {
    cv.decoder_blobs.push_back(quantize_tensor(t, model_bits));
  }
  for (const auto& f : features) {
    cv.feature_blobs.push_back(quantize_tensor(f, feature_bits));
  }

  if (cv.variant == Variant::residual) {
    const auto res_path = train_dir / kResidualFile;
    if (!std::filesystem::exists(res_path)) {
      throw IoError("compress: residual variant but no " +
                    std::string(kResidualFile) + " in " + train_dir.string());
    }
    ResidualStream rs = load_residual_stream(res_path);
    cv.scale_n = rs.config.n;
    cv.bit_depth = rs.config.bit_depth;
    cv.residual = std::move(rs);
  }

  const auto bytes = pack(cv);
  write_file_bytes(out_file.string(), bytes);

  if (log) {
    const BppBreakdown bd = bpp_breakdown(cv);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "bpp decoder %.12g\n", bd.decoder);
    *log << buf;
    std::snprintf(buf, sizeof(buf), "bpp features %.12g\n", bd.features);
    *log << buf;
    std::snprintf(buf, sizeof(buf), "bpp residual %.12g\n", bd.residual);
    *log << buf;
    std::snprintf(buf, sizeof(buf), "bpp header %.12g\n", bd.header);
    *log << buf;
    std::snprintf(buf, sizeof(buf), "bpp total %.12g\n", bd.total);
    *log << buf;
    *log << "bytes " << bytes.size() << '\n';
  }
  return cv;
}

std::vector<Tensor<float>> decode_container(const CompressedVideo& cv) {
  // Rebuild the decoder-only model: dequantized weights in blob order
  // (stage weights, then biases), validated against the config geometry.
  Model<float> model;
  model.config = cv.model_config;
  model.config.variant = cv.variant;
  const std::size_t n_dec = cv.model_config.stages.size() + 1;
  if (cv.decoder_blobs.size() != 2 * n_dec) {
    throw DecodeError("decode: expected " + std::to_string(2 * n_dec) +
                      " decoder blobs, got " +
                      std::to_string(cv.decoder_blobs.size()));
  }
  for (std::size_t i = 0; i < n_dec; ++i) {
    model.dec_w.push_back(dequantize_tensor<float>(cv.decoder_blobs[i]));
  }
  for (std::size_t i = 0; i < n_dec; ++i) {
    model.dec_b.push_back(
        dequantize_tensor<float>(cv.decoder_blobs[n_dec + i]));
  }

  if (int(cv.feature_blobs.size()) != cv.frame_count) {
    throw DecodeError("decode: feature blob count mismatch");
  }
  std::vector<Tensor<float>> out;
  out.reserve(std::size_t(cv.frame_count));
  for (int t = 0; t < cv.frame_count; ++t) {
    Tensor<float> feat = dequantize_tensor<float>(cv.feature_blobs[t]);
    const Tensor<float>* base = nullptr;
    Tensor<float> lr;
    if (cv.variant == Variant::residual) {
      lr = lowres_base<float>(*cv.residual, std::size_t(t), cv.frame_h,
                              cv.frame_w);
      base = &lr;
    }
    out.push_back(reconstruct_frame(model, feat, base));
  }
  return out;
}

void cmd_decode(const std::filesystem::path& in_file,
                const std::filesystem::path& out_dir, bool also_raw) {
  const auto bytes = read_file_bytes(in_file.string());
  const CompressedVideo cv = unpack({bytes.data(), bytes.size()});
  const auto frames = decode_container(cv);
  write_frame_dir(out_dir, frames, also_raw);
}

MetricReport cmd_eval(const std::filesystem::path& recon_dir,
                      const std::filesystem::path& orig_dir,
                      const std::filesystem::path& csv_path,
                      const std::string& video_id) {
  FrameSequence recon = read_frame_dir(recon_dir);
  FrameSequence orig = read_frame_dir(orig_dir);
  if (recon.count() != orig.count()) {
    throw std::invalid_argument(
        "eval: frame count mismatch (" + std::to_string(recon.count()) +
        " reconstructed vs " + std::to_string(orig.count()) + " original)");
  }
  if (recon.height() != orig.height() || recon.width() != orig.width()) {
    throw std::invalid_argument("eval: frame dims mismatch");
  }
  std::vector<FrameMetrics> frames;
  for (int t = 0; t < recon.count(); ++t) {
    FrameMetrics fm;
    fm.psnr_db = psnr(recon.frames[std::size_t(t)], orig.frames[std::size_t(t)]);
    fm.ms_ssim = ms_ssim(recon.frames[std::size_t(t)], orig.frames[std::size_t(t)]);
    frames.push_back(fm);
  }
  MetricReport report = make_report(
      video_id.empty() ? orig.source_id : video_id, std::move(frames));
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw IoError(csv_path.string() + ": cannot open for writing");
    write_metric_csv(out, report);
  }
  return report;
}

std::vector<RdCell> cmd_rd_sweep(const TrainOptions& base,
                                 const std::filesystem::path& frames_dir,
                                 const std::vector<double>& sizes,
                                 const std::vector<Variant>& variants,
                                 const std::filesystem::path& out_csv,
                                 const std::filesystem::path& workdir,
                                 std::ostream* log) {
  std::filesystem::create_directories(workdir);
  std::vector<RdCell> cells;
  for (const Variant variant : variants) {
    for (const double size : sizes) {
      RdCell cell;
      cell.variant = variant_name(variant);
      cell.size_mult = size;
      const std::string tag =
          std::string(variant_name(variant)) + "_" + std::to_string(size);
      try {
        TrainOptions opts = base;
        opts.run.variant = variant;
        opts.model_size = base.model_size * size;
        const auto cell_dir = workdir / tag;
        if (log) *log << "[rd-sweep] " << tag << ": training\n";
        cmd_train(opts, frames_dir, cell_dir, nullptr);
        const auto container = cell_dir / "video.rinr";
        cmd_compress(cell_dir, container, opts.run.feature_bits,
                     opts.run.model_bits, nullptr);
        const auto recon_dir = cell_dir / "recon";
        cmd_decode(container, recon_dir);
        MetricReport report =
            cmd_eval(recon_dir, frames_dir, cell_dir / "metrics.csv", tag);
        const auto bytes = read_file_bytes(container.string());
        const CompressedVideo cv = unpack({bytes.data(), bytes.size()});
        cell.bpp = total_bpp(cv);
        cell.psnr_db = report.mean_psnr_db;
        cell.ms_ssim = report.mean_ms_ssim;
      } catch (const std::exception& e) {
        cell.status = std::string("error: ") + e.what();
      }
      cells.push_back(cell);
      if (log) {
        *log << "[rd-sweep] " << tag << ": " << cell.status << " bpp "
             << cell.bpp << " psnr " << cell.psnr_db << '\n';
      }
    }
  }
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw IoError(out_csv.string() + ": cannot open for writing");
    out << "variant,size,bpp,psnr_db,ms_ssim,status\n";
    for (const auto& c : cells) {
      out << c.variant << ',' << format_metric(c.size_mult) << ','
          << format_metric(c.bpp) << ',' << format_metric(c.psnr_db) << ','
          << format_metric(c.ms_ssim) << ',' << c.status << '\n';
    }
  }
  return cells;
}

}  // namespace rinr
