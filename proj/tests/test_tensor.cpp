#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "rinr/kernels.hpp"
#include "rinr/ops.hpp"
#include "rinr/reference.hpp"

using rinr::Shape;
using rinr::Tensor;
using testutil::random_tensor;

TEST_CASE("conv2d: 1x1 identity kernel passes input through") {
  std::mt19937 rng(1);
  auto x = random_tensor<float>({1, 1, 4, 6}, rng);
  auto w = Tensor<float>::full({1, 1, 1, 1}, 1.0f);
  auto b = Tensor<float>::zeros({1, 1, 1, 1});
  auto y = rinr::conv2d(x, w, b, 1, 0);
  REQUIRE(y.shape() == x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    CHECK(y.value()[i] == x.value()[i]);
  }
}

TEST_CASE("conv2d: 3x3 averaging kernel preserves constants") {
  auto x = Tensor<float>::full({1, 1, 5, 7}, 0.37f);
  auto w = Tensor<float>::full({1, 1, 3, 3}, 1.0f / 9.0f);
  auto b = Tensor<float>::zeros({1, 1, 1, 1});
  auto y = rinr::conv2d(x, w, b, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 3, 5});
  for (const float v : y.value()) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("conv2d: shape errors carry diagnostics") {
  std::mt19937 rng(2);
  auto x = random_tensor<float>({1, 2, 5, 5}, rng);
  auto w = random_tensor<float>({3, 4, 3, 3}, rng);  // channel mismatch
  auto b = Tensor<float>::zeros({1, 3, 1, 1});
  CHECK_THROWS_WITH_AS(rinr::conv2d(x, w, b, 1, 0),
                       doctest::Contains("channels"), rinr::ShapeError);

  auto w2 = random_tensor<float>({3, 2, 7, 7}, rng);  // kernel exceeds input
  auto b2 = Tensor<float>::zeros({1, 3, 1, 1});
  CHECK_THROWS_WITH_AS(rinr::conv2d(x, w2, b2, 1, 0),
                       doctest::Contains("non-positive"), rinr::ShapeError);

  auto w3 = random_tensor<float>({3, 2, 3, 3}, rng);
  auto bbad = Tensor<float>::zeros({1, 4, 1, 1});
  CHECK_THROWS_AS(rinr::conv2d(x, w3, bbad, 1, 0), rinr::ShapeError);
  CHECK_THROWS_AS(rinr::conv2d(x, w3, b, 0, 0), rinr::ShapeError);
  CHECK_THROWS_AS(rinr::conv2d(x, w3, b, 1, -1), rinr::ShapeError);
}

TEST_CASE("pixel_shuffle: r=1 is the identity") {
  std::mt19937 rng(3);
  auto x = random_tensor<float>({1, 4, 3, 5}, rng);
  auto y = rinr::pixel_shuffle(x, 1);
  REQUIRE(y.shape() == x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    CHECK(y.value()[i] == x.value()[i]);
  }
}

TEST_CASE("pixel_shuffle: hand-applied index formula on (1,4,1,1)") {
  auto x = Tensor<float>::from_data({1, 4, 1, 1}, {1.0f, 2.0f, 3.0f, 4.0f});
  auto y = rinr::pixel_shuffle(x, 2);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y.value()[0] == 1.0f);  // (0,0) <- channel 0
  CHECK(y.value()[1] == 2.0f);  // (0,1) <- channel 1
  CHECK(y.value()[2] == 3.0f);  // (1,0) <- channel 2
  CHECK(y.value()[3] == 4.0f);  // (1,1) <- channel 3
}

TEST_CASE("pixel_shuffle / pixel_unshuffle: bit-identical round trip") {
  std::mt19937 rng(4);
  auto x = random_tensor<float>({1, 8, 3, 3}, rng);
  auto rt = rinr::pixel_unshuffle(rinr::pixel_shuffle(x, 2), 2);
  REQUIRE(rt.shape() == x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    CHECK(rt.value()[i] == x.value()[i]);
  }
  CHECK_THROWS_AS(rinr::pixel_shuffle(x, 3), rinr::ShapeError);
}

TEST_CASE("gelu: fixed points and asymptote") {
  auto x = Tensor<float>::from_data({1, 1, 1, 3}, {0.0f, 10.0f, -10.0f});
  auto y = rinr::gelu(x);
  CHECK(y.value()[0] == 0.0f);
  CHECK(std::abs(y.value()[1] - 10.0f) < 1e-6);
  CHECK(std::abs(y.value()[2]) < 1e-6);
}

TEST_CASE("mse_loss: trivial values and analytic gradient") {
  std::mt19937 rng(5);
  auto a = random_tensor<double>({1, 2, 3, 4}, rng);
  auto same = Tensor<double>::from_data(
      a.shape(), std::vector<double>(a.value().begin(), a.value().end()));
  CHECK(rinr::mse_loss(a, same).item() == 0.0);

  auto b = Tensor<double>::zeros(a.shape());
  auto shifted = Tensor<double>::from_data(
      a.shape(), std::vector<double>(a.numel(), 0.1));
  CHECK(rinr::mse_loss(shifted, b).item() ==
        doctest::Approx(0.01).epsilon(1e-12));

  // grad wrt a must be 2(a-b)/count
  auto al = random_tensor<double>({1, 1, 2, 3}, rng, -1.0, 1.0, true);
  auto bl = random_tensor<double>({1, 1, 2, 3}, rng);
  auto loss = rinr::mse_loss(al, bl);
  loss.backward();
  for (std::int64_t i = 0; i < al.numel(); ++i) {
    const double expect =
        2.0 * (al.value()[i] - bl.value()[i]) / double(al.numel());
    CHECK(al.grad()[i] == doctest::Approx(expect).epsilon(1e-12));
  }
  auto c = Tensor<double>::zeros({1, 1, 2, 2});
  CHECK_THROWS_AS(rinr::mse_loss(al, c), rinr::ShapeError);
}

TEST_CASE("backward: sum gives ones, repeated backward accumulates") {
  auto x = Tensor<float>::full({1, 1, 2, 3}, 0.5f, true);
  auto loss = rinr::sum(x);
  loss.backward();
  for (const float g : x.grad()) CHECK(g == 1.0f);
  loss.backward();
  for (const float g : x.grad()) CHECK(g == 2.0f);

  auto y = Tensor<float>::full({1, 1, 2, 3}, 0.5f, true);
  CHECK_THROWS_AS(y.backward(), rinr::ShapeError);
}

TEST_CASE("backward: non-participating leaves keep zero grads") {
  std::mt19937 rng(6);
  auto x = random_tensor<float>({1, 1, 2, 2}, rng, -1.0f, 1.0f, true);
  auto unused = random_tensor<float>({1, 1, 2, 2}, rng, -1.0f, 1.0f, true);
  auto constant = random_tensor<float>({1, 1, 2, 2}, rng);  // no grad
  auto loss = rinr::sum(rinr::add(x, constant));
  loss.backward();
  for (const float g : x.grad()) CHECK(g == 1.0f);
  CHECK(unused.grad().empty());     // never touched
  CHECK(constant.grad().empty());   // requires_grad == false
}

TEST_CASE("kernels: parallel and serial reference agree bit for bit") {
  std::mt19937 rng(7);
  struct Case {
    Shape in, w;
    int stride, pad;
  };
  const Case cases[] = {
      {{1, 2, 5, 5}, {3, 2, 3, 3}, 1, 1},
      {{2, 3, 8, 6}, {4, 3, 3, 3}, 2, 1},
      {{1, 4, 7, 9}, {2, 4, 5, 5}, 1, 2},
      {{1, 3, 6, 6}, {5, 3, 1, 1}, 1, 0},
      {{1, 8, 4, 4}, {8, 8, 3, 3}, 4, 1},
  };
  for (const auto& c : cases) {
    CAPTURE(c.in.str());
    const auto d = rinr::kernels::Conv2dDims::infer(c.in, c.w, c.stride, c.pad);
    auto in = random_tensor<float>(c.in, rng);
    auto w = random_tensor<float>(c.w, rng);
    auto b = random_tensor<float>({1, c.w.n, 1, 1}, rng);
    std::vector<float> out_par(std::size_t(d.out_numel()));
    std::vector<float> out_ser(out_par.size());
    rinr::kernels::conv2d_forward(in.value().data(), w.value().data(),
                                  b.value().data(), out_par.data(), d);
    rinr::reference::conv2d_forward(in.value().data(), w.value().data(),
                                    b.value().data(), out_ser.data(), d);
    CHECK(out_par == out_ser);

    // backward parity, seeded from the forward output as the upstream grad
    std::vector<float> gin_par(std::size_t(d.in_numel()), 0.125f);
    std::vector<float> gin_ser = gin_par;
    rinr::kernels::conv2d_backward_input(out_par.data(), w.value().data(),
                                         gin_par.data(), d);
    rinr::reference::conv2d_backward_input(out_ser.data(), w.value().data(),
                                           gin_ser.data(), d);
    CHECK(gin_par == gin_ser);

    std::vector<float> gw_par(std::size_t(c.w.numel()), -0.5f);
    std::vector<float> gw_ser = gw_par;
    rinr::kernels::conv2d_backward_weight(out_par.data(), in.value().data(),
                                          gw_par.data(), d);
    rinr::reference::conv2d_backward_weight(out_ser.data(), in.value().data(),
                                            gw_ser.data(), d);
    CHECK(gw_par == gw_ser);

    std::vector<float> gb_par(std::size_t(c.w.n), 0.0f);
    std::vector<float> gb_ser = gb_par;
    rinr::kernels::conv2d_backward_bias(out_par.data(), gb_par.data(), d);
    rinr::reference::conv2d_backward_bias(out_ser.data(), gb_ser.data(), d);
    CHECK(gb_par == gb_ser);
  }

  // pixel shuffle, box downsample, bicubic
  auto x = random_tensor<float>({1, 12, 6, 4}, rng);
  std::vector<float> sp(std::size_t(x.numel())), ss(sp.size());
  rinr::kernels::pixel_shuffle(x.value().data(), sp.data(), 1, 3, 6, 4, 2);
  rinr::reference::pixel_shuffle(x.value().data(), ss.data(), 1, 3, 6, 4, 2);
  CHECK(sp == ss);

  auto img = random_tensor<float>({1, 3, 16, 24}, rng, 0.0f, 1.0f);
  std::vector<float> dp(std::size_t(3 * 4 * 6)), ds(dp.size());
  rinr::kernels::box_downsample(img.value().data(), dp.data(), 3, 16, 24, 4);
  rinr::reference::box_downsample(img.value().data(), ds.data(), 3, 16, 24, 4);
  CHECK(dp == ds);

  std::vector<float> up(std::size_t(3 * 16 * 24)), us(up.size());
  rinr::kernels::bicubic_upscale(dp.data(), up.data(), 3, 4, 6, 4);
  rinr::reference::bicubic_upscale(ds.data(), us.data(), 3, 4, 6, 4);
  CHECK(up == us);
}

TEST_CASE("kernels: results identical for any thread count") {
  std::mt19937 rng(8);
  const Shape in_s{1, 6, 12, 16}, w_s{8, 6, 3, 3};
  const auto d = rinr::kernels::Conv2dDims::infer(in_s, w_s, 1, 1);
  auto in = random_tensor<float>(in_s, rng);
  auto w = random_tensor<float>(w_s, rng);

  rinr::kernels::set_max_threads(1);
  std::vector<float> out1(std::size_t(d.out_numel()));
  rinr::kernels::conv2d_forward(in.value().data(), w.value().data(),
                                static_cast<const float*>(nullptr),
                                out1.data(), d);
  rinr::kernels::set_max_threads(0);
  std::vector<float> out2(out1.size());
  rinr::kernels::conv2d_forward(in.value().data(), w.value().data(),
                                static_cast<const float*>(nullptr),
                                out2.data(), d);
  CHECK(out1 == out2);
}

TEST_CASE("conv2d then pixel_shuffle restores spatial dims (decoder blocks)") {
  // Shape algebra for the stage configs in use: stride-s conv followed by
  // pixel_shuffle(r = s) is dimension-neutral.
  std::mt19937 rng(9);
  for (const int s : {2, 4}) {
    auto x = random_tensor<float>({1, 3, 16, 16}, rng);
    auto w = random_tensor<float>({3 * s * s, 3, 3, 3}, rng);
    auto b = random_tensor<float>({1, 3 * s * s, 1, 1}, rng);
    auto y = rinr::pixel_shuffle(rinr::conv2d(x, w, b, s, 1), s);
    CHECK(y.shape().h == 16);
    CHECK(y.shape().w == 16);
  }
}
