// Finite-difference oracle for every differentiable op and for the
// end-to-end residual pipeline, at 64-bit precision over several seeds.

#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "rinr/model.hpp"
#include "rinr/ops.hpp"
#include "rinr/residual.hpp"

using rinr::Shape;
using rinr::Tensor;
using testutil::gradcheck;
using testutil::random_tensor;

namespace {
constexpr std::uint32_t kSeeds[] = {11, 22, 33, 44, 55};
}

TEST_CASE("gradcheck: conv2d wrt input, weight and bias") {
  for (const auto seed : kSeeds) {
    std::mt19937 rng(seed);
    auto x = random_tensor<double>({1, 2, 5, 5}, rng, -1.0, 1.0, true);
    auto w = random_tensor<double>({3, 2, 3, 3}, rng, -1.0, 1.0, true);
    auto b = random_tensor<double>({1, 3, 1, 1}, rng, -1.0, 1.0, true);
    gradcheck({&x, &w, &b}, [&] {
      return rinr::sum(rinr::conv2d(x, w, b, 1, 1));
    });
  }
}

TEST_CASE("gradcheck: strided conv2d") {
  for (const auto seed : kSeeds) {
    std::mt19937 rng(seed);
    auto x = random_tensor<double>({1, 3, 6, 8}, rng, -1.0, 1.0, true);
    auto w = random_tensor<double>({2, 3, 3, 3}, rng, -1.0, 1.0, true);
    auto b = random_tensor<double>({1, 2, 1, 1}, rng, -1.0, 1.0, true);
    // squared sum makes the upstream grad non-constant
    gradcheck({&x, &w, &b}, [&] {
      auto y = rinr::conv2d(x, w, b, 2, 1);
      return rinr::mse_loss(y, rinr::Tensor<double>::zeros(y.shape()));
    });
  }
}

TEST_CASE("gradcheck: gelu") {
  for (const auto seed : kSeeds) {
    std::mt19937 rng(seed);
    auto x = random_tensor<double>({1, 2, 3, 4}, rng, -2.0, 2.0, true);
    auto target = random_tensor<double>({1, 2, 3, 4}, rng);
    gradcheck({&x},
              [&] { return rinr::mse_loss(rinr::gelu(x), target); },
              1e-6);  // gelu is pinned at a tighter tolerance
  }
}

TEST_CASE("gradcheck: sigmoid") {
  for (const auto seed : kSeeds) {
    std::mt19937 rng(seed);
    auto x = random_tensor<double>({1, 2, 3, 4}, rng, -3.0, 3.0, true);
    auto target = random_tensor<double>({1, 2, 3, 4}, rng, 0.0, 1.0);
    gradcheck({&x},
              [&] { return rinr::mse_loss(rinr::sigmoid(x), target); });
  }
}

TEST_CASE("gradcheck: add and pixel_shuffle") {
  for (const auto seed : kSeeds) {
    std::mt19937 rng(seed);
    auto a = random_tensor<double>({1, 8, 2, 3}, rng, -1.0, 1.0, true);
    auto b = random_tensor<double>({1, 8, 2, 3}, rng, -1.0, 1.0, true);
    auto target = random_tensor<double>({1, 2, 4, 6}, rng);
    gradcheck({&a, &b}, [&] {
      return rinr::mse_loss(rinr::pixel_shuffle(rinr::add(a, b), 2), target);
    });
  }
}

TEST_CASE("gradcheck: mse(conv2d) composite reaches every parameter") {
  for (const auto seed : kSeeds) {
    std::mt19937 rng(seed);
    auto x = random_tensor<double>({1, 2, 5, 5}, rng, -1.0, 1.0, true);
    auto w = random_tensor<double>({3, 2, 3, 3}, rng, -1.0, 1.0, true);
    auto b = random_tensor<double>({1, 3, 1, 1}, rng, -1.0, 1.0, true);
    auto target = random_tensor<double>({1, 3, 5, 5}, rng);
    gradcheck({&x, &w, &b}, [&] {
      return rinr::mse_loss(rinr::conv2d(x, w, b, 1, 1), target);
    });
  }
}

TEST_CASE("gradcheck: end-to-end residual pipeline on a micro model") {
  // loss(y_LR + dec(enc(y)), y): finite differences over every encoder and
  // decoder parameter.
  for (const auto seed : {11u, 22u, 33u, 44u, 55u}) {
    rinr::ModelConfig cfg;
    cfg.variant = rinr::Variant::residual;
    cfg.feature_c = 2;
    cfg.feature_h = 2;
    cfg.feature_w = 2;
    cfg.stages = {{2, 3}, {2, 3}};
    cfg.base_width = 3;
    cfg.encoder_width = 3;
    auto model = rinr::build_model<double>(cfg, seed);

    std::mt19937 rng(seed * 7 + 1);
    auto frame = random_tensor<double>({1, 3, 8, 8}, rng, 0.0, 1.0);
    auto y_small = rinr::downsample(frame, 4);
    auto codes = rinr::quantize_lowres(y_small, 8);
    auto y_lr = rinr::bicubic_upsample(
        rinr::dequantize_lowres<double>(codes, 2, 2, 8), 8, 8);

    std::vector<Tensor<double>*> leaves = model.parameters();
    testutil::gradcheck(leaves, [&] {
      auto feat = rinr::encoder_forward(model, frame);
      auto out = rinr::decoder_forward(model, feat);
      return rinr::mse_loss(rinr::add(y_lr, out), frame);
    });
  }
}
