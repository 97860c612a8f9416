// rinr: residual-connection implicit neural video codec.
//
// Subcommands: synth, train, compress, decode, eval, rd-sweep.
// Exit code 0 on success; nonzero with a single "error: ..." line otherwise.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rinr/commands.hpp"

namespace {

// "64x128" -> (64, 128): height x width.
std::pair<int, int> parse_hw(const std::string& s, const char* what) {
  const auto x = s.find('x');
  if (x == std::string::npos) {
    throw std::invalid_argument(std::string(what) +
                                ": expected HxW, got '" + s + "'");
  }
  return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<rinr::Variant> parse_variants(const std::string& s) {
  std::vector<rinr::Variant> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "baseline") {
      out.push_back(rinr::Variant::baseline);
    } else if (item == "residual") {
      out.push_back(rinr::Variant::residual);
    } else {
      throw std::invalid_argument("unknown variant '" + item + "'");
    }
  }
  return out;
}

struct TrainFlags {
  std::string variant = "residual";
  std::string crop;
  std::string config_file;
};

void add_train_options(CLI::App* cmd, rinr::TrainOptions& opts,
                       TrainFlags& flags) {
  cmd->add_option("--variant", flags.variant, "baseline | residual")
      ->check(CLI::IsMember({"baseline", "residual"}));
  cmd->add_option("--scale-n", opts.run.scale_n,
                  "residual resize scale (must divide frame dims)");
  cmd->add_option("--model-size", opts.model_size,
                  "target decoder parameter count");
  cmd->add_option("--epochs", opts.run.epochs, "training epochs");
  cmd->add_option("--lr", opts.run.lr,
                  "learning rate (0 = per-variant default: 9.9e-4 residual, "
                  "1e-3 baseline)");
  cmd->add_option("--seed", opts.run.seed, "RNG seed");
  cmd->add_option("--feature-bits", opts.run.feature_bits,
                  "feature quantization bit width");
  cmd->add_option("--model-bits", opts.run.model_bits,
                  "decoder weight quantization bit width");
  cmd->add_option("--feature-ch", opts.feature_ch, "feature channels");
  cmd->add_option("--down-factor", opts.down_factor,
                  "spatial reduction from frame to feature map");
  cmd->add_option("--crop", flags.crop, "center-crop frames to HxW");
  cmd->add_option("--config", flags.config_file,
                  "key=value config file (flags override)");
}

// Start from the struct defaults, layer the config file on top, then any
// flag the user actually passed.
void finish_train_options(const CLI::App* cmd, rinr::TrainOptions& opts,
                          const TrainFlags& flags) {
  rinr::TrainOptions merged;
  if (!flags.config_file.empty()) {
    rinr::apply_config_file(flags.config_file, merged);
  }
  if (cmd->count("--variant")) {
    merged.run.variant = flags.variant == "baseline" ? rinr::Variant::baseline
                                                     : rinr::Variant::residual;
  }
  if (cmd->count("--scale-n")) merged.run.scale_n = opts.run.scale_n;
  if (cmd->count("--model-size")) merged.model_size = opts.model_size;
  if (cmd->count("--epochs")) merged.run.epochs = opts.run.epochs;
  if (cmd->count("--lr")) merged.run.lr = opts.run.lr;
  if (cmd->count("--seed")) merged.run.seed = opts.run.seed;
  if (cmd->count("--feature-bits")) {
    merged.run.feature_bits = opts.run.feature_bits;
  }
  if (cmd->count("--model-bits")) merged.run.model_bits = opts.run.model_bits;
  if (cmd->count("--feature-ch")) merged.feature_ch = opts.feature_ch;
  if (cmd->count("--down-factor")) merged.down_factor = opts.down_factor;
  if (!flags.crop.empty()) {
    const auto [h, w] = parse_hw(flags.crop, "--crop");
    merged.crop_h = h;
    merged.crop_w = w;
  }
  opts = merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"residual-connection implicit neural video codec"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  std::string synth_kind = "balls", synth_size = "64x128", synth_out;
  int synth_frames = 16, synth_divisor = 32;
  std::uint32_t synth_seed = 1;
  synth->add_option("--kind", synth_kind, "rects | balls | gratings");
  synth->add_option("--frames", synth_frames, "frame count");
  synth->add_option("--size", synth_size, "frame dims HxW");
  synth->add_option("--seed", synth_seed, "RNG seed");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--divisor", synth_divisor,
                    "required divisor of both dims (0 disables the check)");

  // train
  auto* train_cmd = app.add_subcommand("train", "fit a model to a sequence");
  std::string train_frames, train_out;
  rinr::TrainOptions train_opts;
  TrainFlags train_flags;
  train_cmd->add_option("--frames", train_frames, "input frame directory")
      ->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  add_train_options(train_cmd, train_opts, train_flags);

  // compress
  auto* compress = app.add_subcommand("compress", "pack trained artifacts");
  std::string comp_train_dir, comp_out;
  int comp_feature_bits = 6, comp_model_bits = 8;
  compress->add_option("--train-dir", comp_train_dir, "cmd_train output dir")
      ->required();
  compress->add_option("--out", comp_out, "output container file")->required();
  compress->add_option("--feature-bits", comp_feature_bits,
                       "feature quantization bit width");
  compress->add_option("--model-bits", comp_model_bits,
                       "decoder weight quantization bit width");

  // decode
  auto* decode = app.add_subcommand("decode", "reconstruct frames");
  std::string dec_in, dec_out;
  bool dec_raw = false;
  decode->add_option("--in", dec_in, "compressed container")->required();
  decode->add_option("--out", dec_out, "output frame directory")->required();
  decode->add_flag("--raw", dec_raw, "also write raw float32 frames");

  // eval
  auto* eval = app.add_subcommand("eval", "PSNR / MS-SSIM report");
  std::string eval_recon, eval_orig, eval_out, eval_id;
  eval->add_option("--recon", eval_recon, "reconstructed frames")->required();
  eval->add_option("--orig", eval_orig, "original frames")->required();
  eval->add_option("--out", eval_out, "output CSV")->required();
  eval->add_option("--video-id", eval_id, "id column value");

  // rd-sweep
  auto* sweep = app.add_subcommand("rd-sweep",
                                   "rate-distortion sweep over model sizes");
  std::string sweep_frames, sweep_out, sweep_work;
  std::string sweep_sizes = "0.5,1,1.5,2";
  std::string sweep_variants = "baseline,residual";
  rinr::TrainOptions sweep_opts;
  TrainFlags sweep_flags;
  sweep->add_option("--frames", sweep_frames, "input frame directory")
      ->required();
  sweep->add_option("--out", sweep_out, "output CSV")->required();
  sweep->add_option("--workdir", sweep_work, "scratch directory")->required();
  sweep->add_option("--sizes", sweep_sizes, "size multipliers");
  sweep->add_option("--variants", sweep_variants, "variants to sweep");
  add_train_options(sweep, sweep_opts, sweep_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto [h, w] = parse_hw(synth_size, "--size");
      rinr::cmd_synth(rinr::synth_kind_from_string(synth_kind), synth_frames,
                      h, w, synth_seed, synth_out, synth_divisor);
      std::cout << "wrote " << synth_frames << " frames to " << synth_out
                << '\n';
    } else if (*train_cmd) {
      finish_train_options(train_cmd, train_opts, train_flags);
      const auto result =
          rinr::cmd_train(train_opts, train_frames, train_out, &std::cout);
      std::cout << "trained " << rinr::variant_name(train_opts.run.variant)
                << " model; artifacts in " << train_out << '\n';
      (void)result;
    } else if (*compress) {
      rinr::cmd_compress(comp_train_dir, comp_out, comp_feature_bits,
                         comp_model_bits, &std::cout);
    } else if (*decode) {
      rinr::cmd_decode(dec_in, dec_out, dec_raw);
      std::cout << "decoded to " << dec_out << '\n';
    } else if (*eval) {
      const auto report = rinr::cmd_eval(eval_recon, eval_orig, eval_out,
                                         eval_id);
      std::cout << "mean psnr " << rinr::format_metric(report.mean_psnr_db)
                << " ms-ssim " << rinr::format_metric(report.mean_ms_ssim)
                << '\n';
    } else if (*sweep) {
      finish_train_options(sweep, sweep_opts, sweep_flags);
      rinr::cmd_rd_sweep(sweep_opts, sweep_frames, parse_doubles(sweep_sizes),
                         parse_variants(sweep_variants), sweep_out, sweep_work,
                         &std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
