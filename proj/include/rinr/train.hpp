#pragma once

// Per-video training (the encode step of the codec): overfit the
// autoencoder to one frame sequence. The baseline variant regresses the
// frame directly; the residual variant regresses on top of the bicubically
// upsampled 8-bit low-resolution frame per ỹ = y_LR + f(y).

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "rinr/image_io.hpp"
#include "rinr/model.hpp"
#include "rinr/optim.hpp"
#include "rinr/residual.hpp"

namespace rinr {

class TrainDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Variant variant = Variant::residual;
  int scale_n = 8;
  int bit_depth = 8;
  ModelConfig model;  // feature dims/stages resolved against the frames
  int epochs = 500;
  double lr = 0.0;  // 0 = per-variant default
  std::uint32_t seed = 1;
  int feature_bits = 6;
  int model_bits = 8;

  // 9.9e-4 for the residual variant, 1e-3 for the baseline.
  double effective_lr() const {
    if (lr > 0.0) return lr;
    return variant == Variant::residual ? 9.9e-4 : 1e-3;
  }

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (lr < 0.0) throw std::invalid_argument("config: lr must be > 0");
    if (feature_bits < 1 || feature_bits > 16 || model_bits < 1 ||
        model_bits > 16) {
      throw std::invalid_argument("config: bit widths must be in [1,16]");
    }
  }
};

struct TrainResult {
  Model<float> model;
  std::vector<Tensor<float>> features;        // final per-frame features
  std::optional<ResidualStream> residual;
  std::vector<Tensor<float>> lowres_bases;    // y_LR per frame (residual only)
  double epoch0_loss = 0.0;                   // initial loss, before updates
  double final_psnr_db = 0.0;                 // clamped reconstruction PSNR
  std::vector<double> epoch_mean_loss;
};

// Checks that the frame dims are divisible by the model's total upsample
// factor and by scale n; throws with the requirement spelled out.
void check_divisibility(int frame_h, int frame_w, int upsample_factor,
                        int scale_n);

TrainResult train(const RunConfig& cfg, const FrameSequence& frames,
                  std::ostream* log = nullptr);

// Inference path shared by training eval and the decoder: decoder output
// plus the low-resolution base (residual variant), clamped to [0,1].
Tensor<float> reconstruct_frame(const Model<float>& model,
                                const Tensor<float>& feature,
                                const Tensor<float>* lowres_base);

}  // namespace rinr
