#pragma once

// Differentiable tensor operations. Forward values come from the parallel
// kernels; backprop closures accumulate into parent grads through the same
// kernels, so forward and backward are deterministic for any thread count.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rinr/kernels.hpp"
#include "rinr/tensor.hpp"

namespace rinr {

namespace detail {

template <typename T>
std::vector<T> copy_of(std::span<const T> s) {
  return std::vector<T>(s.begin(), s.end());
}

}  // namespace detail

// Cross-correlation with square kernel. weight: (out_ch, in_ch, k, k),
// bias: (1, out_ch, 1, 1) or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (ws.h != ws.w) {
    throw ShapeError("conv2d: kernel must be square, got " + ws.str());
  }
  if (is.c != ws.c) {
    throw ShapeError("conv2d: input channels " + std::to_string(is.c) +
                     " do not match weight " + ws.str());
  }
  if (bias.defined() && bias.shape() != Shape{1, ws.n, 1, 1}) {
    throw ShapeError("conv2d: bias shape " + bias.shape().str() +
                     " must be (1," + std::to_string(ws.n) + ",1,1)");
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (padding < 0) throw ShapeError("conv2d: padding must be >= 0");

  const auto d = kernels::Conv2dDims::infer(is, ws, stride, padding);
  if (d.out_h <= 0 || d.out_w <= 0) {
    throw ShapeError("conv2d: non-positive output dims for input " + is.str() +
                     ", kernel " + std::to_string(d.kernel) + ", stride " +
                     std::to_string(stride) + ", pad " +
                     std::to_string(padding));
  }
  const Shape out_shape{d.batch, d.out_ch, d.out_h, d.out_w};
  std::vector<T> out(out_shape.numel());
  kernels::conv2d_forward(input.value().data(), weight.value().data(),
                          bias.defined() ? bias.value().data() : nullptr,
                          out.data(), d);

  const bool track = input.requires_grad() || weight.requires_grad() ||
                     (bias.defined() && bias.requires_grad());
  if (!track) return Tensor<T>::from_data(out_shape, std::move(out));

  Tensor<T> in_c = input, w_c = weight, b_c = bias;
  std::vector<Tensor<T>> parents{input, weight};
  if (bias.defined()) parents.push_back(bias);
  return Tensor<T>::make_result(
      out_shape, std::move(out), std::move(parents),
      [in_c, w_c, b_c, d](std::span<const T> g) mutable {
        if (in_c.requires_grad()) {
          kernels::conv2d_backward_input(g.data(), w_c.value().data(),
                                         in_c.mutable_grad().data(), d);
        }
        if (w_c.requires_grad()) {
          kernels::conv2d_backward_weight(g.data(), in_c.value().data(),
                                          w_c.mutable_grad().data(), d);
        }
        if (b_c.defined() && b_c.requires_grad()) {
          kernels::conv2d_backward_bias(g.data(), b_c.mutable_grad().data(), d);
        }
      });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, int stride,
                 int padding) {
  return conv2d(input, weight, Tensor<T>(), stride, padding);
}

// (N, C, H, W) -> (N, C/r^2, rH, rW).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r) {
  const Shape& s = input.shape();
  if (r < 1) throw ShapeError("pixel_shuffle: factor must be >= 1");
  if (s.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: channels " + std::to_string(s.c) +
                     " not divisible by r^2 = " + std::to_string(r * r));
  }
  const Shape out_shape{s.n, s.c / (r * r), s.h * r, s.w * r};
  std::vector<T> out(out_shape.numel());
  kernels::pixel_shuffle(input.value().data(), out.data(), s.n, out_shape.c,
                         s.h, s.w, r);
  if (!input.requires_grad()) {
    return Tensor<T>::from_data(out_shape, std::move(out));
  }
  Tensor<T> in_c = input;
  const int base_ch = out_shape.c;
  return Tensor<T>::make_result(
      out_shape, std::move(out), {input},
      [in_c, base_ch, s, r](std::span<const T> g) mutable {
        kernels::pixel_unshuffle<T, true>(g.data(), in_c.mutable_grad().data(),
                                          s.n, base_ch, s.h, s.w, r);
      });
}

// Exact inverse of pixel_shuffle: (N, C, rH, rW) -> (N, C*r^2, H, W).
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& input, int r) {
  const Shape& s = input.shape();
  if (r < 1) throw ShapeError("pixel_unshuffle: factor must be >= 1");
  if (s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("pixel_unshuffle: dims " + s.str() +
                     " not divisible by r = " + std::to_string(r));
  }
  const Shape out_shape{s.n, s.c * r * r, s.h / r, s.w / r};
  std::vector<T> out(out_shape.numel());
  kernels::pixel_unshuffle(input.value().data(), out.data(), s.n, s.c,
                           out_shape.h, out_shape.w, r);
  if (!input.requires_grad()) {
    return Tensor<T>::from_data(out_shape, std::move(out));
  }
  Tensor<T> in_c = input;
  const int base_ch = s.c;
  return Tensor<T>::make_result(
      out_shape, std::move(out), {input},
      [in_c, base_ch, out_shape, r](std::span<const T> g) mutable {
        kernels::pixel_shuffle<T, true>(g.data(), in_c.mutable_grad().data(),
                                        out_shape.n, base_ch, out_shape.h,
                                        out_shape.w, r);
      });
}

// x * Phi(x) with the exact Gaussian CDF.
template <typename T>
Tensor<T> gelu(const Tensor<T>& input) {
  std::vector<T> out(input.numel());
  kernels::gelu_forward(input.value().data(), out.data(), input.numel());
  if (!input.requires_grad()) {
    return Tensor<T>::from_data(input.shape(), std::move(out));
  }
  Tensor<T> in_c = input;
  return Tensor<T>::make_result(
      input.shape(), std::move(out), {input},
      [in_c](std::span<const T> g) mutable {
        kernels::gelu_backward(in_c.value().data(), g.data(),
                               in_c.mutable_grad().data(), in_c.numel());
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  std::vector<T> out(input.numel());
  kernels::sigmoid_forward(input.value().data(), out.data(), input.numel());
  if (!input.requires_grad()) {
    return Tensor<T>::from_data(input.shape(), std::move(out));
  }
  Tensor<T> in_c = input;
  return Tensor<T>::make_result(
      input.shape(), std::move(out), {input},
      [in_c](std::span<const T> g) mutable {
        kernels::sigmoid_backward(in_c.value().data(), g.data(),
                                  in_c.mutable_grad().data(), in_c.numel());
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  std::vector<T> out(a.numel());
  kernels::add_forward(a.value().data(), b.value().data(), out.data(),
                       a.numel());
  if (!a.requires_grad() && !b.requires_grad()) {
    return Tensor<T>::from_data(a.shape(), std::move(out));
  }
  Tensor<T> a_c = a, b_c = b;
  return Tensor<T>::make_result(
      a.shape(), std::move(out), {a, b},
      [a_c, b_c](std::span<const T> g) mutable {
        if (a_c.requires_grad()) {
          kernels::accumulate(g.data(), a_c.mutable_grad().data(),
                              a_c.numel());
        }
        if (b_c.requires_grad()) {
          kernels::accumulate(g.data(), b_c.mutable_grad().data(),
                              b_c.numel());
        }
      });
}

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}

// Sum of all elements, as a (1,1,1,1) tensor. Accumulated in double.
template <typename T>
Tensor<T> sum(const Tensor<T>& input) {
  double acc = 0.0;
  for (const T v : input.value()) acc += double(v);
  std::vector<T> out{T(acc)};
  if (!input.requires_grad()) {
    return Tensor<T>::from_data({1, 1, 1, 1}, std::move(out));
  }
  Tensor<T> in_c = input;
  return Tensor<T>::make_result(
      {1, 1, 1, 1}, std::move(out), {input},
      [in_c](std::span<const T> g) mutable {
        const T gv = g[0];
        auto gin = in_c.mutable_grad();
        for (auto& x : gin) x += gv;
      });
}

// Mean squared error, as a (1,1,1,1) tensor. d/da = 2(a-b)/count.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mse_loss: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  const auto av = a.value();
  const auto bv = b.value();
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = double(av[i]) - double(bv[i]);
    acc += d * d;
  }
  std::vector<T> out{T(acc / double(a.numel()))};
  if (!a.requires_grad() && !b.requires_grad()) {
    return Tensor<T>::from_data({1, 1, 1, 1}, std::move(out));
  }
  Tensor<T> a_c = a, b_c = b;
  return Tensor<T>::make_result(
      {1, 1, 1, 1}, std::move(out), {a, b},
      [a_c, b_c](std::span<const T> g) mutable {
        const T scale = g[0] * T(2) / T(a_c.numel());
        const auto av = a_c.value();
        const auto bv = b_c.value();
        if (a_c.requires_grad()) {
          auto ga = a_c.mutable_grad();
          for (std::int64_t i = 0; i < a_c.numel(); ++i) {
            ga[i] += scale * (av[i] - bv[i]);
          }
        }
        if (b_c.requires_grad()) {
          auto gb = b_c.mutable_grad();
          for (std::int64_t i = 0; i < b_c.numel(); ++i) {
            gb[i] -= scale * (av[i] - bv[i]);
          }
        }
      });
}

}  // namespace rinr
