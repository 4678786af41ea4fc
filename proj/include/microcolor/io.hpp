#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-enum-enum-conversion"
#include <opencv2/imgcodecs.hpp>
#pragma GCC diagnostic pop

#include "microcolor/image.hpp"

// File I/O. Decoding and encoding of PNG/JPEG/TIFF are delegated to the
// OpenCV codecs; everything returned to callers is in this library's value
// types, with channels in RGB order.

namespace microcolor {

/// Decode an 8-bit image file. Single-channel sources come back with
/// r = g = b; alpha is dropped.
inline RgbImage load_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw io_error("load_image: cannot decode '" + path.string() + "'");
  RgbImage img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x) {
      std::uint8_t* p = img.pixel(x, y);
      p[0] = row[x][2];  // OpenCV stores BGR
      p[1] = row[x][1];
      p[2] = row[x][0];
    }
  }
  return img;
}

inline void save_image(const RgbImage& img, const std::filesystem::path& path) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      row[x] = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  if (!cv::imwrite(path.string(), m))
    throw io_error("save_image: cannot write '" + path.string() + "'");
}

/// Decode as a single gray plane scaled to [0,1] (mean of RGB when the file
/// is color). Used for externally supplied edge maps and masks.
inline Plane load_gray01(const std::filesystem::path& path) {
  const RgbImage img = load_image(path);
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* q = img.pixel(x, y);
      p.at(x, y) = (q[0] + q[1] + q[2]) / (3.0 * 255.0);
    }
  return p;
}

inline void save_gray01(const Plane& p, const std::filesystem::path& path) {
  RgbImage img(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      const auto g =
          static_cast<std::uint8_t>(std::clamp<long>(std::lround(p.at(x, y) * 255.0), 0, 255));
      std::uint8_t* q = img.pixel(x, y);
      q[0] = q[1] = q[2] = g;
    }
  save_image(img, path);
}

/// Comma-separated grid of plane values, row per line. For inspection and
/// plotting; not meant to round-trip.
inline void write_plane_csv(const Plane& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("write_plane_csv: cannot open '" + path.string() + "'");
  char buf[64];
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      std::snprintf(buf, sizeof buf, "%.6f", p.at(x, y));
      out << (x ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out.flush()) throw io_error("write_plane_csv: write failed for '" + path.string() + "'");
}

}  // namespace microcolor
