#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "microcolor/errors.hpp"

namespace microcolor {

/// Single-channel raster of doubles, row-major. Values are interpreted by the
/// owning image type (luminance in [0,100], chroma in [-128,127], and so on);
/// quantization to 8 bits happens only at image export.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w < 1 || h < 1) throw argument_error("Plane: dimensions must be >= 1");
    v.assign(static_cast<std::size_t>(w) * h, fill);
  }

  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const { return v.size(); }
  bool same_size(const Plane& o) const { return width == o.width && height == o.height; }
  bool operator==(const Plane& o) const = default;
};

/// 8-bit interchange image, interleaved r,g,b.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> px;  // 3 * width * height

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) throw argument_error("RgbImage: dimensions must be >= 1");
    px.assign(static_cast<std::size_t>(w) * h * 3, 0);
  }

  static RgbImage filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RgbImage img(w, h);
    for (std::size_t i = 0; i < img.px.size(); i += 3) {
      img.px[i] = r;
      img.px[i + 1] = g;
      img.px[i + 2] = b;
    }
    return img;
  }

  std::uint8_t* pixel(int x, int y) { return &px[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &px[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  bool operator==(const RgbImage& o) const = default;
};

/// Color-opponent image: luminance plane L in [0,100] plus chroma planes
/// A and B in [-128,127]. All three planes share one geometry.
struct LabImage {
  Plane l, a, b;

  int width() const { return l.width; }
  int height() const { return l.height; }

  /// Validating factory; the invariants here are what downstream code relies on.
  static LabImage create(Plane lp, Plane ap, Plane bp) {
    if (!lp.same_size(ap) || !lp.same_size(bp))
      throw argument_error("LabImage: planes must share dimensions");
    auto in_range = [](const Plane& p, double lo, double hi) {
      return std::all_of(p.v.begin(), p.v.end(), [&](double x) {
        return std::isfinite(x) && x >= lo && x <= hi;
      });
    };
    if (!in_range(lp, 0.0, 100.0)) throw argument_error("LabImage: L outside [0,100]");
    if (!in_range(ap, -128.0, 127.0)) throw argument_error("LabImage: A outside [-128,127]");
    if (!in_range(bp, -128.0, 127.0)) throw argument_error("LabImage: B outside [-128,127]");
    return LabImage{std::move(lp), std::move(ap), std::move(bp)};
  }
  bool operator==(const LabImage& o) const = default;
};

/// Predicted chroma pair (A, B), each in [-128,127].
struct ChromaMap {
  Plane a, b;

  int width() const { return a.width; }
  int height() const { return a.height; }

  static ChromaMap zeros(int w, int h) { return ChromaMap{Plane(w, h, 0.0), Plane(w, h, 0.0)}; }

  static ChromaMap create(Plane ap, Plane bp) {
    if (!ap.same_size(bp)) throw argument_error("ChromaMap: planes must share dimensions");
    auto ok = [](const Plane& p) {
      return std::all_of(p.v.begin(), p.v.end(), [](double x) {
        return std::isfinite(x) && x >= -128.0 && x <= 127.0;
      });
    };
    if (!ok(ap) || !ok(bp)) throw argument_error("ChromaMap: values outside [-128,127]");
    return ChromaMap{std::move(ap), std::move(bp)};
  }
  bool operator==(const ChromaMap& o) const = default;
};

/// Hue [0,360), saturation [0,1], value [0,1] view of an RGB image.
struct HsvImage {
  Plane h, s, v;

  int width() const { return h.width; }
  int height() const { return h.height; }
};

/// Bilinear resample of an 8-bit image to the target size. Pixel centers are
/// aligned so that resizing to the source size is the identity.
inline RgbImage resize_bilinear(const RgbImage& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1)
    throw argument_error("resize_bilinear: target dimensions must be >= 1");
  RgbImage out(target_w, target_h);
  const double sx = static_cast<double>(src.width) / target_w;
  const double sy = static_cast<double>(src.height) / target_h;
  for (int y = 0; y < target_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const std::uint8_t* p00 = src.pixel(x0, y0);
      const std::uint8_t* p10 = src.pixel(x1, y0);
      const std::uint8_t* p01 = src.pixel(x0, y1);
      const std::uint8_t* p11 = src.pixel(x1, y1);
      std::uint8_t* dst = out.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = p00[ch] + (p10[ch] - p00[ch]) * wx;
        const double bot = p01[ch] + (p11[ch] - p01[ch]) * wx;
        const double val = top + (bot - top) * wy;
        dst[ch] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(val), 0, 255));
      }
    }
  }
  return out;
}

}  // namespace microcolor
