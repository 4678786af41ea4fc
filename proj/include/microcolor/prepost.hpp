#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "microcolor/colorspace.hpp"
#include "microcolor/errors.hpp"
#include "microcolor/image.hpp"

// Structure-aware cleanup around the network: edge maps, region labeling,
// and the rule that pixels with the same luminance inside the same region
// receive exactly the same chroma.

namespace microcolor {

/// Per-pixel edge strength, normalized to [0, 1].
struct EdgeMap {
  Plane strength;
  int width() const { return strength.width; }
  int height() const { return strength.height; }
};

/// Integer region labels; 0 means "not covered" where that distinction
/// matters (masks), otherwise labels are arbitrary non-negative ids.
struct RegionMask {
  int width = 0, height = 0;
  std::vector<int> v;

  RegionMask() = default;
  RegionMask(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, 0) {
    if (w < 1 || h < 1) throw argument_error("RegionMask: dimensions must be positive");
  }

  int& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  int at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }

  int max_label() const {
    int m = 0;
    for (int l : v) m = std::max(m, l);
    return m;
  }

  /// For full partitions with contiguous labels starting at 0.
  int region_count() const { return max_label() + 1; }
};

class EdgeDetector {
 public:
  virtual ~EdgeDetector() = default;
  virtual EdgeMap detect(const Plane& l) const = 0;
  virtual std::string name() const = 0;
};

/// Central-difference gradient magnitude (one-sided at the borders),
/// normalized by the image-wide maximum. A flat image maps to all zeros.
class GradientMagnitudeDetector : public EdgeDetector {
 public:
  EdgeMap detect(const Plane& l) const override {
    EdgeMap e{Plane(l.width, l.height)};
    double peak = 0.0;
    for (int y = 0; y < l.height; ++y)
      for (int x = 0; x < l.width; ++x) {
        const double gx =
            (l.at(std::min(x + 1, l.width - 1), y) - l.at(std::max(x - 1, 0), y)) / 2.0;
        const double gy =
            (l.at(x, std::min(y + 1, l.height - 1)) - l.at(x, std::max(y - 1, 0))) / 2.0;
        const double g = std::hypot(gx, gy);
        e.strength.at(x, y) = g;
        peak = std::max(peak, g);
      }
    if (peak > 0.0)
      for (double& s : e.strength.v) s /= peak;
    return e;
  }

  std::string name() const override { return "gradient-magnitude"; }
};

inline EdgeMap detect_edges(const Plane& l, const EdgeDetector& detector) {
  return detector.detect(l);
}

/// Partition into regions: pixels whose edge strength is below the threshold
/// are grouped by 4-connected flood fill (labels assigned in scan order from
/// 0), then edge pixels are absorbed pass by pass into the neighboring
/// region they share the longest boundary with, lower label winning ties.
/// Every pixel ends up labeled; an all-edge image collapses to one region.
inline RegionMask label_regions(const EdgeMap& edges, double threshold) {
  const int w = edges.width(), h = edges.height();
  RegionMask mask(w, h);
  std::fill(mask.v.begin(), mask.v.end(), -1);
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (edges.strength.at(x, y) >= threshold || mask.at(x, y) >= 0) continue;
      const int label = next++;
      mask.at(x, y) = label;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          if (mask.at(nx[k], ny[k]) >= 0 || edges.strength.at(nx[k], ny[k]) >= threshold) continue;
          mask.at(nx[k], ny[k]) = label;
          queue.push_back({nx[k], ny[k]});
        }
      }
    }

  if (next == 0) {  // nothing below threshold anywhere
    std::fill(mask.v.begin(), mask.v.end(), 0);
    return mask;
  }

  // absorb edge pixels, advancing one ring per pass so growth stays even
  bool pending = true;
  while (pending) {
    pending = false;
    std::vector<std::pair<std::size_t, int>> assign;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (mask.at(x, y) >= 0) continue;
        pending = true;
        std::map<int, int> votes;
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          const int l = mask.at(nx[k], ny[k]);
          if (l >= 0) ++votes[l];
        }
        if (votes.empty()) continue;
        int best = 0, best_count = 0;
        for (const auto& [label, count] : votes)
          if (count > best_count) {  // map iterates ascending, so ties keep the lower label
            best = label;
            best_count = count;
          }
        assign.push_back({static_cast<std::size_t>(y) * w + x, best});
      }
    for (const auto& [i, label] : assign) mask.v[i] = label;
    if (pending && assign.empty()) break;  // isolated -1s can't occur, but don't spin
  }
  return mask;
}

/// How a pixel group is collapsed to one chroma value.
enum class Aggregator { mean, median };

namespace detail {

struct GroupStat {
  std::vector<double> a_vals, b_vals;

  void add(double a, double b) {
    a_vals.push_back(a);
    b_vals.push_back(b);
  }

  /// Group value: already-constant groups pass through untouched (this is
  /// what makes repeated application bit-identical); otherwise the mean or
  /// median, pinned inside the group's own range.
  static double collapse(std::vector<double>& vals, Aggregator agg) {
    const auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) return lo;
    if (agg == Aggregator::mean) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      return std::clamp(sum / static_cast<double>(vals.size()), lo, hi);
    }
    const std::size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    double m = vals[mid];
    if (vals.size() % 2 == 0) {
      // lower middle is the max of the first half after partitioning
      const double lower = *std::max_element(vals.begin(), vals.begin() + mid);
      m = (lower + m) / 2.0;
    }
    return std::clamp(m, lo, hi);
  }

  double value_a(Aggregator agg) { return collapse(a_vals, agg); }
  double value_b(Aggregator agg) { return collapse(b_vals, agg); }
};

}  // namespace detail

/// Replace every pixel's chroma with its region's representative chroma.
inline ChromaMap uniform_fill(const ChromaMap& ab, const RegionMask& regions,
                              Aggregator agg = Aggregator::mean) {
  if (regions.width != ab.a.width || regions.height != ab.a.height)
    throw shape_error("uniform_fill: mask " + std::to_string(regions.width) + "x" +
                      std::to_string(regions.height) + " vs chroma " + std::to_string(ab.a.width) +
                      "x" + std::to_string(ab.a.height));
  std::map<int, detail::GroupStat> stats;
  for (std::size_t i = 0; i < regions.v.size(); ++i) stats[regions.v[i]].add(ab.a.v[i], ab.b.v[i]);
  std::map<int, std::pair<double, double>> value;
  for (auto& [label, g] : stats) value[label] = {g.value_a(agg), g.value_b(agg)};
  ChromaMap out = ab;
  for (std::size_t i = 0; i < regions.v.size(); ++i) {
    const auto& [a, b] = value[regions.v[i]];
    out.a.v[i] = a;
    out.b.v[i] = b;
  }
  return out;
}

/// Luminance bin index at the given granularity.
inline long luminance_bin(double l, double bin_width) {
  return static_cast<long>(std::floor(l / bin_width));
}

/// Make chroma a function of (region, luminance bin): every pixel in the
/// same region whose L falls in the same bin gets the identical (a, b).
/// Without a mask the whole image is one region. Idempotent bit-for-bit.
inline ChromaMap enforce_same_l_same_ab(const Plane& l, const ChromaMap& ab, double bin_width,
                                        const std::optional<RegionMask>& regions = std::nullopt,
                                        Aggregator agg = Aggregator::mean) {
  if (!(bin_width > 0.0)) throw argument_error("enforce_same_l_same_ab: bin width must be positive");
  if (l.width != ab.a.width || l.height != ab.a.height)
    throw shape_error("enforce_same_l_same_ab: luminance " + std::to_string(l.width) + "x" +
                      std::to_string(l.height) + " vs chroma " + std::to_string(ab.a.width) + "x" +
                      std::to_string(ab.a.height));
  if (regions && (regions->width != l.width || regions->height != l.height))
    throw shape_error("enforce_same_l_same_ab: mask dimensions do not match image");

  std::map<std::pair<int, long>, detail::GroupStat> stats;
  auto key = [&](std::size_t i) {
    return std::pair<int, long>{regions ? regions->v[i] : 0, luminance_bin(l.v[i], bin_width)};
  };
  for (std::size_t i = 0; i < l.v.size(); ++i) stats[key(i)].add(ab.a.v[i], ab.b.v[i]);
  std::map<std::pair<int, long>, std::pair<double, double>> value;
  for (auto& [k, g] : stats) value[k] = {g.value_a(agg), g.value_b(agg)};
  ChromaMap out = ab;
  for (std::size_t i = 0; i < l.v.size(); ++i) {
    const auto& [a, b] = value[key(i)];
    out.a.v[i] = a;
    out.b.v[i] = b;
  }
  return out;
}

/// Foreground map from a local-mean comparison: label 1 where L exceeds the
/// window mean minus `offset`. The window must be odd and at least 3; means
/// near the border replicate the edge rows/columns.
inline RegionMask adaptive_threshold(const Plane& l, int window, double offset) {
  if (window < 3 || window % 2 == 0)
    throw argument_error("adaptive_threshold: window must be odd and >= 3, got " +
                         std::to_string(window));
  RegionMask out(l.width, l.height);
  const int r = window / 2;
  for (int y = 0; y < l.height; ++y)
    for (int x = 0; x < l.width; ++x) {
      double sum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int sy = std::clamp(y + dy, 0, l.height - 1);
        for (int dx = -r; dx <= r; ++dx) sum += l.at(std::clamp(x + dx, 0, l.width - 1), sy);
      }
      const double mean = sum / (static_cast<double>(window) * window);
      out.at(x, y) = l.at(x, y) > mean - offset ? 1 : 0;
    }
  return out;
}

/// Masks travel as grayscale images: the 8-bit value is the label.
inline RegionMask mask_from_image(const RgbImage& img) {
  RegionMask mask(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      mask.at(x, y) = static_cast<int>(std::lround((p[0] + p[1] + p[2]) / 3.0));
    }
  return mask;
}

inline RgbImage mask_to_image(const RegionMask& mask) {
  RgbImage img(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      const auto g = static_cast<std::uint8_t>(std::clamp(mask.at(x, y), 0, 255));
      std::uint8_t* p = img.pixel(x, y);
      p[0] = p[1] = p[2] = g;
    }
  return img;
}

}  // namespace microcolor
