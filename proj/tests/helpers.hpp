#pragma once

// Shared test utilities: random tensors, the central-finite-difference
// gradient oracle, and small comparison helpers. Everything here is
// independent of the library's backward implementations.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "rinr/tensor.hpp"

namespace testutil {

template <typename T>
rinr::Tensor<T> random_tensor(const rinr::Shape& s, std::mt19937& rng,
                              T lo = T(-1), T hi = T(1),
                              bool requires_grad = false) {
  return rinr::Tensor<T>::uniform(s, lo, hi, rng, requires_grad);
}

inline bool close_rel(double a, double b, double tol,
                      double abs_floor = 1e-6) {
  const double denom = std::max({std::abs(a), std::abs(b), abs_floor});
  return std::abs(a - b) <= tol * denom;
}

// Central finite differences against the recorded backward pass, h = 1e-5 at
// 64-bit. `make_loss` must rebuild the graph from the leaves on every call.
inline void gradcheck(std::vector<rinr::Tensor<double>*> leaves,
                      const std::function<rinr::Tensor<double>()>& make_loss,
                      double tol = 1e-4, double h = 1e-5) {
  for (auto* l : leaves) l->zero_grad();
  rinr::Tensor<double> loss = make_loss();
  loss.backward();

  std::vector<std::vector<double>> analytic;
  for (auto* l : leaves) {
    analytic.emplace_back(l->grad().begin(), l->grad().end());
    REQUIRE(!analytic.back().empty());
  }

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto vals = leaves[li]->mutable_value();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + h;
      const double lp = make_loss().item();
      vals[i] = orig - h;
      const double lm = make_loss().item();
      vals[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[li][i];
      INFO("leaf ", li, " element ", i, ": analytic ", a, " numeric ",
           numeric);
      CHECK(close_rel(a, numeric, tol));
    }
  }
}

}  // namespace testutil
