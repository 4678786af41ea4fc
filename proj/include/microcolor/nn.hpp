#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "microcolor/rng.hpp"
#include "microcolor/tensor.hpp"

// Convolution, activation, and resampling primitives with analytic gradients.
// Inner products run through Eigen matrix maps; everything is single-threaded
// and bit-reproducible for a fixed build.

namespace microcolor {
namespace nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstMapMat = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

/// 2-D convolution with square kernel and "same"-style padding: output is
/// ceil(H/stride) x ceil(W/stride). Total padding k - stride is split with
/// the smaller half leading, matching the convention of common frameworks.
struct Conv2d {
  int k = 4;
  int in_c = 0;
  int out_c = 0;
  int stride = 1;
  Array w;  // (k, k, in_c, out_c)
  Array b;  // (out_c)

  Conv2d() = default;
  Conv2d(int kernel, int in_channels, int out_channels, int stride_)
      : k(kernel),
        in_c(in_channels),
        out_c(out_channels),
        stride(stride_),
        w(Array({kernel, kernel, in_channels, out_channels})),
        b(Array({out_channels})) {}

  int out_dim(int n) const { return (n + stride - 1) / stride; }

  void pad_amounts(int n, int& before, int& after) const {
    const int out = out_dim(n);
    const int total = std::max((out - 1) * stride + k - n, 0);
    before = total / 2;
    after = total - before;
  }

  Tensor pad_input(const Tensor& x) const {
    int pt, pb, pl, pr;
    pad_amounts(x.h, pt, pb);
    pad_amounts(x.w, pl, pr);
    Tensor p(x.h + pt + pb, x.w + pl + pr, x.c);
    for (int y = 0; y < x.h; ++y) {
      const double* src = &x.v[x.idx(y, 0, 0)];
      double* dst = &p.v[p.idx(y + pt, pl, 0)];
      std::copy(src, src + static_cast<std::size_t>(x.w) * x.c, dst);
    }
    return p;
  }

  Tensor forward(const Tensor& x) const {
    if (x.c != in_c)
      throw shape_error("Conv2d: input has " + std::to_string(x.c) + " channels, expected " +
                        std::to_string(in_c));
    const Tensor p = pad_input(x);
    const int oh = out_dim(x.h), ow = out_dim(x.w);
    Tensor y(oh, ow, out_c);
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        std::copy(b.v.begin(), b.v.end(), &y.v[y.idx(oy, ox, 0)]);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        ConstMapMat wm(&w.v[((static_cast<std::size_t>(ky) * k) + kx) * in_c * out_c], in_c, out_c,
                       Eigen::OuterStride<>(out_c));
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky;
          ConstMapMat in(&p.v[p.idx(iy, kx, 0)], ow, in_c,
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(stride) * in_c));
          MapMat out(&y.v[y.idx(oy, 0, 0)], ow, out_c, Eigen::OuterStride<>(out_c));
          out.noalias() += in * wm;
        }
      }
    }
    return y;
  }

  /// Accumulates parameter gradients into dw/db and returns the input
  /// gradient. x must be the tensor the forward pass saw.
  Tensor backward(const Tensor& x, const Tensor& dy, Array& dw, Array& db) const {
    if (!dw.same_shape(w)) dw = Array(w.shape);
    if (!db.same_shape(b)) db = Array(b.shape);
    const Tensor p = pad_input(x);
    Tensor dp(p.h, p.w, p.c);
    const int oh = dy.h, ow = dy.w;
    for (std::size_t i = 0; i < dy.count(); ++i) db.v[i % out_c] += dy.v[i];
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const std::size_t woff = ((static_cast<std::size_t>(ky) * k) + kx) * in_c * out_c;
        ConstMapMat wm(&w.v[woff], in_c, out_c, Eigen::OuterStride<>(out_c));
        MapMat dwm(&dw.v[woff], in_c, out_c, Eigen::OuterStride<>(out_c));
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky;
          const Eigen::OuterStride<> in_stride(static_cast<Eigen::Index>(stride) * in_c);
          ConstMapMat in(&p.v[p.idx(iy, kx, 0)], ow, in_c, in_stride);
          ConstMapMat dyr(&dy.v[dy.idx(oy, 0, 0)], ow, out_c, Eigen::OuterStride<>(out_c));
          MapMat dpr(&dp.v[dp.idx(iy, kx, 0)], ow, in_c, in_stride);
          dwm.noalias() += in.transpose() * dyr;
          dpr.noalias() += dyr * wm.transpose();
        }
      }
    }
    // strip padding
    int pt, pb, pl, pr;
    pad_amounts(x.h, pt, pb);
    pad_amounts(x.w, pl, pr);
    Tensor dx(x.h, x.w, x.c);
    for (int y = 0; y < x.h; ++y) {
      const double* src = &dp.v[dp.idx(y + pt, pl, 0)];
      std::copy(src, src + static_cast<std::size_t>(x.w) * x.c, &dx.v[dx.idx(y, 0, 0)]);
    }
    return dx;
  }

  /// Fan-in scaled uniform init, biases zero. `gain` rescales the limit; the
  /// output layer uses a small gain so an untrained network predicts neutral.
  void init(std::mt19937_64& rng, double gain = 1.0) {
    const double fan_in = static_cast<double>(k) * k * in_c;
    const double limit = gain * std::sqrt(6.0 / fan_in);
    for (double& x : w.v) x = uniform_range(rng, -limit, limit);
    for (double& x : b.v) x = 0.0;
  }
};

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& t : y.v) t = t > 0.0 ? t : 0.0;
  return y;
}

/// dx from dy given the forward output y (y > 0 iff the unit was active).
inline Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.count(); ++i)
    if (y.v[i] <= 0.0) dx.v[i] = 0.0;
  return dx;
}

inline Tensor tanh_forward(const Tensor& x) {
  Tensor y = x;
  for (double& t : y.v) t = std::tanh(t);
  return y;
}

inline Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.count(); ++i) dx.v[i] *= 1.0 - y.v[i] * y.v[i];
  return dx;
}

/// Nearest-neighbor x2 upsampling.
inline Tensor upsample2(const Tensor& x) {
  Tensor y(x.h * 2, x.w * 2, x.c);
  for (int iy = 0; iy < x.h; ++iy)
    for (int ix = 0; ix < x.w; ++ix) {
      const double* src = &x.v[x.idx(iy, ix, 0)];
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          std::copy(src, src + x.c, &y.v[y.idx(iy * 2 + dy, ix * 2 + dx, 0)]);
    }
  return y;
}

inline Tensor upsample2_backward(const Tensor& dy) {
  Tensor dx(dy.h / 2, dy.w / 2, dy.c);
  for (int y = 0; y < dy.h; ++y)
    for (int x = 0; x < dy.w; ++x) {
      const double* src = &dy.v[dy.idx(y, x, 0)];
      double* dst = &dx.v[dx.idx(y / 2, x / 2, 0)];
      for (int ch = 0; ch < dy.c; ++ch) dst[ch] += src[ch];
    }
  return dx;
}

}  // namespace nn
}  // namespace microcolor
