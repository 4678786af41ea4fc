#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "microcolor/errors.hpp"

namespace microcolor {

/// Row-major H x W x C activation block.
struct Tensor {
  int h = 0, w = 0, c = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int h_, int w_, int c_, double fill = 0.0) : h(h_), w(w_), c(c_) {
    if (h_ < 0 || w_ < 0 || c_ < 0) throw argument_error("Tensor: negative dimension");
    v.assign(static_cast<std::size_t>(h_) * w_ * c_, fill);
  }

  std::size_t idx(int y, int x, int ch) const {
    return (static_cast<std::size_t>(y) * w + x) * c + ch;
  }
  double& at(int y, int x, int ch) { return v[idx(y, x, ch)]; }
  double at(int y, int x, int ch) const { return v[idx(y, x, ch)]; }
  std::size_t count() const { return v.size(); }
  std::string shape_str() const {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }
};

/// N-dimensional parameter block (convolution kernels, biases, optimizer
/// state). Shape is carried explicitly so checkpoints stay self-describing.
struct Array {
  std::vector<int> shape;
  std::vector<double> v;

  Array() = default;
  explicit Array(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 1) throw argument_error("Array: dimensions must be >= 1");
      n *= static_cast<std::size_t>(d);
    }
    v.assign(n, fill);
  }

  std::size_t count() const { return v.size(); }
  bool same_shape(const Array& o) const { return shape == o.shape; }
};

}  // namespace microcolor
