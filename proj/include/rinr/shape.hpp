#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rinr {

// Dense 4-D extent (batch, channels, height, width). Every value in the
// pipeline -- frames, features, weights, biases, scalars -- is 4-D.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const {
    return std::int64_t(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rinr
