#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "microcolor/image.hpp"

// RGB <-> CIELAB <-> HSV conversions. The LAB leg is the standard
// sRGB -> XYZ -> LAB chain with the D65 reference white; the white point is
// taken as the exact row sums of the RGB->XYZ matrix so that neutral inputs
// (r = g = b) land on A = B = 0 up to rounding.

namespace microcolor {
namespace detail {

// sRGB -> XYZ (D65, linear-light), rows X, Y, Z.
inline constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
inline constexpr double kXyzToRgb[3][3] = {
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
};
inline constexpr double kWhiteX = kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2];
inline constexpr double kWhiteY = kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2];
inline constexpr double kWhiteZ = kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2];

// CIE thresholds in exact rational form.
inline constexpr double kLabEps = 216.0 / 24389.0;
inline constexpr double kLabKappa = 24389.0 / 27.0;

inline double srgb_to_linear(double u) {
  return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double u) {
  return u <= 0.0031308 ? 12.92 * u : 1.055 * std::pow(u, 1.0 / 2.4) - 0.055;
}

inline double lab_f(double t) {
  return t > kLabEps ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0;
}

inline double lab_f_inv(double ft) {
  const double t3 = ft * ft * ft;
  return t3 > kLabEps ? t3 : (116.0 * ft - 16.0) / kLabKappa;
}

inline std::uint8_t quantize8(double channel01) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(channel01 * 255.0), 0, 255));
}

}  // namespace detail

/// One sRGB pixel (8-bit channels) to L, A, B.
inline void rgb_to_lab_pixel(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8, double& l,
                             double& a, double& b) {
  using namespace detail;
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double bl = srgb_to_linear(b8 / 255.0);
  const double x = kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * bl;
  const double y = kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * bl;
  const double z = kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * bl;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  l = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
  a = std::clamp(500.0 * (fx - fy), -128.0, 127.0);
  b = std::clamp(200.0 * (fy - fz), -128.0, 127.0);
}

/// One LAB pixel back to 8-bit sRGB; out-of-gamut channels clamp to [0,255].
inline void lab_to_rgb_pixel(double l, double a, double b, std::uint8_t& r8, std::uint8_t& g8,
                             std::uint8_t& b8) {
  using namespace detail;
  const double fy = (l + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double x = lab_f_inv(fx) * kWhiteX;
  const double y = lab_f_inv(fy) * kWhiteY;
  const double z = lab_f_inv(fz) * kWhiteZ;
  const double rl = kXyzToRgb[0][0] * x + kXyzToRgb[0][1] * y + kXyzToRgb[0][2] * z;
  const double gl = kXyzToRgb[1][0] * x + kXyzToRgb[1][1] * y + kXyzToRgb[1][2] * z;
  const double bl = kXyzToRgb[2][0] * x + kXyzToRgb[2][1] * y + kXyzToRgb[2][2] * z;
  r8 = quantize8(linear_to_srgb(rl));
  g8 = quantize8(linear_to_srgb(gl));
  b8 = quantize8(linear_to_srgb(bl));
}

inline LabImage rgb_to_lab(const RgbImage& img) {
  Plane l(img.width, img.height), a(img.width, img.height), b(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      rgb_to_lab_pixel(p[0], p[1], p[2], l.at(x, y), a.at(x, y), b.at(x, y));
    }
  }
  return LabImage{std::move(l), std::move(a), std::move(b)};
}

inline RgbImage lab_to_rgb(const LabImage& img) {
  RgbImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::uint8_t* p = out.pixel(x, y);
      lab_to_rgb_pixel(img.l.at(x, y), img.a.at(x, y), img.b.at(x, y), p[0], p[1], p[2]);
    }
  }
  return out;
}

/// Hexcone HSV. Hue of a neutral pixel is undefined and reported as 0 with
/// saturation exactly 0.
inline HsvImage rgb_to_hsv(const RgbImage& img) {
  HsvImage out{Plane(img.width, img.height), Plane(img.width, img.height),
               Plane(img.width, img.height)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      const double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
      const double mx = std::max({r, g, b});
      const double mn = std::min({r, g, b});
      const double d = mx - mn;
      double h = 0.0;
      if (d > 0.0) {
        if (mx == r)
          h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
        else if (mx == g)
          h = 60.0 * ((b - r) / d + 2.0);
        else
          h = 60.0 * ((r - g) / d + 4.0);
        if (h >= 360.0) h -= 360.0;
      }
      out.h.at(x, y) = h;
      out.s.at(x, y) = mx == 0.0 ? 0.0 : d / mx;
      out.v.at(x, y) = mx;
    }
  }
  return out;
}

/// The L / AB decomposition: grayscale content is the L plane alone and the
/// color lives entirely in the chroma pair.
inline std::pair<Plane, ChromaMap> split_l_ab(const LabImage& img) {
  return {img.l, ChromaMap{img.a, img.b}};
}

inline LabImage merge_l_ab(const Plane& l, const ChromaMap& ab) {
  if (!l.same_size(ab.a))
    throw shape_error("merge_l_ab: L plane " + std::to_string(l.width) + "x" +
                      std::to_string(l.height) + " vs chroma " + std::to_string(ab.a.width) + "x" +
                      std::to_string(ab.a.height));
  return LabImage{l, ab.a, ab.b};
}

}  // namespace microcolor
