#include "rinr/train.hpp"

#include <cmath>
#include <iomanip>

#include "rinr/metrics.hpp"

namespace rinr {

void check_divisibility(int frame_h, int frame_w, int upsample_factor,
                        int scale_n) {
  if (frame_h % upsample_factor != 0 || frame_w % upsample_factor != 0 ||
      frame_h % scale_n != 0 || frame_w % scale_n != 0) {
    throw std::invalid_argument(
        "frame dims " + std::to_string(frame_h) + "x" +
        std::to_string(frame_w) + " must be divisible by the model upsample " +
        "factor " + std::to_string(upsample_factor) + " and by scale n = " +
        std::to_string(scale_n));
  }
}

Tensor<float> reconstruct_frame(const Model<float>& model,
                                const Tensor<float>& feature,
                                const Tensor<float>* lowres_base) {
  Tensor<float> out = decoder_forward(model, feature);
  if (model.config.variant == Variant::residual) {
    if (!lowres_base) {
      throw std::invalid_argument(
          "reconstruct_frame: residual variant needs a low-res base");
    }
    return reconstruct(*lowres_base, out);
  }
  // The baseline head already lands in [0,1] through the sigmoid; clamp via
  // reconstruct against a zero base for the shared code path.
  Tensor<float> zero = Tensor<float>::zeros(out.shape());
  return reconstruct(zero, out);
}

namespace {

double eval_mean_loss(const Model<float>& model, const FrameSequence& frames,
                      const std::vector<Tensor<float>>& lowres) {
  double acc = 0.0;
  for (std::size_t t = 0; t < frames.frames.size(); ++t) {
    Tensor<float> feat = encoder_forward(model, frames.frames[t]);
    Tensor<float> out = decoder_forward(model, feat);
    Tensor<float> pre =
        model.config.variant == Variant::residual ? add(lowres[t], out) : out;
    acc += double(mse_loss(pre, frames.frames[t]).item());
  }
  return acc / double(frames.frames.size());
}

}  // namespace

TrainResult train(const RunConfig& cfg, const FrameSequence& frames,
                  std::ostream* log) {
  cfg.validate();
  if (frames.frames.empty()) {
    throw std::invalid_argument("train: empty frame sequence");
  }
  ModelConfig mcfg = cfg.model;
  mcfg.variant = cfg.variant;
  check_divisibility(frames.height(), frames.width(), mcfg.total_upsample(),
                     cfg.scale_n);
  if (mcfg.frame_h() != frames.height() || mcfg.frame_w() != frames.width()) {
    throw std::invalid_argument(
        "train: model config covers " + std::to_string(mcfg.frame_h()) + "x" +
        std::to_string(mcfg.frame_w()) + " frames, sequence is " +
        std::to_string(frames.height()) + "x" +
        std::to_string(frames.width()));
  }

  TrainResult result;
  result.model = build_model<float>(mcfg, cfg.seed);
  Model<float>& model = result.model;

  if (cfg.variant == Variant::residual) {
    ResidualConfig rc;
    rc.n = cfg.scale_n;
    rc.bit_depth = cfg.bit_depth;
    result.residual = build_residual_stream(frames.frames, rc);
    for (std::size_t t = 0; t < frames.frames.size(); ++t) {
      result.lowres_bases.push_back(lowres_base<float>(
          *result.residual, t, frames.height(), frames.width()));
    }
  }

  auto params = model.parameters();
  std::vector<Tensor<float>> param_tensors;
  for (auto* p : params) param_tensors.push_back(*p);
  const double base_lr = cfg.effective_lr();
  std::vector<AdamState<float>> states;
  for (auto& p : param_tensors) {
    states.push_back(AdamState<float>::for_param(p, float(base_lr)));
  }

  const int frame_count = frames.count();
  const std::int64_t total_steps = std::int64_t(cfg.epochs) * frame_count;

  result.epoch0_loss = eval_mean_loss(model, frames, result.lowres_bases);
  if (log) {
    *log << "epoch 0 loss " << result.epoch0_loss << " psnr "
         << format_metric(10.0 * std::log10(1.0 /
                                            std::max(result.epoch0_loss,
                                                     1e-300)))
         << " lr 0" << '\n';
  }

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    double lr_now = base_lr;
    for (int t = 0; t < frame_count; ++t) {
      lr_now = cosine_warmup_lr(step, total_steps, base_lr);
      for (auto& s : states) s.lr = float(lr_now);

      Tensor<float> feat = encoder_forward(model, frames.frames[t]);
      Tensor<float> out = decoder_forward(model, feat);
      Tensor<float> pre = cfg.variant == Variant::residual
                              ? add(result.lowres_bases[t], out)
                              : out;
      Tensor<float> loss = mse_loss(pre, frames.frames[t]);
      const double loss_v = double(loss.item());
      if (!std::isfinite(loss_v)) {
        throw TrainDivergence("training diverged (non-finite loss) at epoch " +
                              std::to_string(epoch));
      }
      epoch_loss += loss_v;
      for (auto& p : param_tensors) p.zero_grad();
      loss.backward();
      adam_step<float>(param_tensors, states);
      ++step;
    }
    epoch_loss /= double(frame_count);
    result.epoch_mean_loss.push_back(epoch_loss);
    if (log) {
      *log << "epoch " << epoch << " loss " << epoch_loss << " psnr "
           << format_metric(10.0 *
                            std::log10(1.0 / std::max(epoch_loss, 1e-300)))
           << " lr " << lr_now << '\n';
    }
  }

  // Final features and clamped-reconstruction PSNR with the trained model.
  double psnr_acc = 0.0;
  for (int t = 0; t < frame_count; ++t) {
    Tensor<float> feat = encoder_forward(model, frames.frames[t]);
    result.features.push_back(feat);
    const Tensor<float>* base =
        cfg.variant == Variant::residual ? &result.lowres_bases[t] : nullptr;
    Tensor<float> recon = reconstruct_frame(model, feat, base);
    psnr_acc += psnr(recon, frames.frames[t], 1.0);
  }
  result.final_psnr_db = psnr_acc / double(frame_count);
  if (log) {
    *log << "final psnr " << format_metric(result.final_psnr_db) << " ("
         << count_params(model) << " decoder params)" << '\n';
  }
  return result;
}

}  // namespace rinr
