#pragma once

// Adam with bias correction, plus the cosine-annealed learning-rate schedule
// with linear warmup used by the training loop.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rinr/tensor.hpp"

namespace rinr {

template <typename T>
struct AdamState {
  std::vector<T> m;  // first moment
  std::vector<T> v;  // second moment
  std::int64_t t = 0;
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);

  static AdamState for_param(const Tensor<T>& p, T lr) {
    AdamState s;
    s.m.assign(std::size_t(p.numel()), T(0));
    s.v.assign(std::size_t(p.numel()), T(0));
    s.lr = lr;
    return s;
  }
};

// One Adam update per parameter. Gradients are left untouched; the caller
// zeroes them before the next backward pass.
template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<AdamState<T>> states) {
  if (params.size() != states.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                " params vs " + std::to_string(states.size()) +
                                " states");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params[i];
    AdamState<T>& s = states[i];
    if (p.grad().empty()) {
      throw std::invalid_argument("adam_step: param " + std::to_string(i) +
                                  " has no gradient");
    }
    if (std::int64_t(s.m.size()) != p.numel()) {
      throw std::invalid_argument("adam_step: state " + std::to_string(i) +
                                  " shape mismatch");
    }
    s.t += 1;
    const T bc1 = T(1) - T(std::pow(double(s.beta1), double(s.t)));
    const T bc2 = T(1) - T(std::pow(double(s.beta2), double(s.t)));
    auto val = p.mutable_value();
    const auto g = p.grad();
    for (std::int64_t j = 0; j < p.numel(); ++j) {
      s.m[j] = s.beta1 * s.m[j] + (T(1) - s.beta1) * g[j];
      s.v[j] = s.beta2 * s.v[j] + (T(1) - s.beta2) * g[j] * g[j];
      const T m_hat = s.m[j] / bc1;
      const T v_hat = s.v[j] / bc2;
      val[j] -= s.lr * m_hat / (T(std::sqrt(double(v_hat))) + s.eps);
    }
  }
}

// Linear warmup over the first `warmup_frac` of training, then cosine decay
// to zero. Step indices are 0-based.
inline double cosine_warmup_lr(std::int64_t step, std::int64_t total_steps,
                               double base_lr, double warmup_frac = 0.1) {
  if (total_steps <= 0) return base_lr;
  const std::int64_t warmup =
      std::int64_t(std::ceil(warmup_frac * double(total_steps)));
  if (step < warmup) {
    return base_lr * double(step + 1) / double(warmup);
  }
  const double progress =
      double(step - warmup) / double(std::max<std::int64_t>(1, total_steps - warmup));
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

}  // namespace rinr
