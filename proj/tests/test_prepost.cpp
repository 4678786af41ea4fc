#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include <microcolor/prepost.hpp>
#include <microcolor/rng.hpp>

#include "oracles.hpp"

using namespace microcolor;

namespace {

Plane random_l(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Plane p(w, h);
  for (double& v : p.v) v = uniform_range(rng, 0.0, 100.0);
  return p;
}

ChromaMap random_chroma(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ChromaMap ab = ChromaMap::zeros(w, h);
  for (double& v : ab.a.v) v = uniform_range(rng, -80.0, 80.0);
  for (double& v : ab.b.v) v = uniform_range(rng, -80.0, 80.0);
  return ab;
}

EdgeMap edge_map_from(std::vector<double> strengths, int w, int h) {
  EdgeMap e{Plane(w, h)};
  e.strength.v = std::move(strengths);
  return e;
}

// hollow rectangle outline drawn into an edge map
void draw_rect_outline(EdgeMap& e, int x0, int y0, int x1, int y1) {
  for (int x = x0; x <= x1; ++x) {
    e.strength.at(x, y0) = 1.0;
    e.strength.at(x, y1) = 1.0;
  }
  for (int y = y0; y <= y1; ++y) {
    e.strength.at(x0, y) = 1.0;
    e.strength.at(x1, y) = 1.0;
  }
}

}  // namespace

TEST_CASE("a flat image has no edges", "[prepost]") {
  const GradientMagnitudeDetector det;
  CHECK(det.name() == "gradient-magnitude");
  const EdgeMap e = detect_edges(Plane(9, 5, 42.0), det);
  REQUIRE(e.width() == 9);
  REQUIRE(e.height() == 5);
  for (double s : e.strength.v) CHECK(s == 0.0);
}

TEST_CASE("a vertical step lights up exactly the two straddling columns", "[prepost]") {
  Plane l(8, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) l.at(x, y) = x < 4 ? 0.0 : 100.0;
  const EdgeMap e = detect_edges(l, GradientMagnitudeDetector{});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      CAPTURE(x, y);
      if (x == 3 || x == 4)
        CHECK(e.strength.at(x, y) == 1.0);
      else
        CHECK(e.strength.at(x, y) == 0.0);
    }
}

TEST_CASE("edge strengths are normalized into the unit interval", "[prepost]") {
  const EdgeMap e = detect_edges(random_l(20, 14, 3), GradientMagnitudeDetector{});
  double peak = 0.0;
  for (double s : e.strength.v) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    peak = std::max(peak, s);
  }
  CHECK(peak == 1.0);
}

TEST_CASE("shifting the input shifts the edge map with it", "[prepost]") {
  // a lone bright pixel on a flat field, viewed through two windows one
  // pixel apart; both crops see the same peak so normalization cancels
  Plane wide(17, 12, 0.0);
  wide.at(8, 6) = 100.0;
  Plane a(16, 12), b(16, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) {
      a.at(x, y) = wide.at(x, y);
      b.at(x, y) = wide.at(x + 1, y);
    }
  const GradientMagnitudeDetector det;
  const EdgeMap ea = det.detect(a), eb = det.detect(b);
  for (int y = 0; y < 12; ++y)
    for (int x = 1; x < 16; ++x) {
      CAPTURE(x, y);
      CHECK(ea.strength.at(x, y) == eb.strength.at(x - 1, y));
    }
}

TEST_CASE("an edgeless image is one region; an all-edge image too", "[prepost]") {
  const RegionMask calm = label_regions(edge_map_from(std::vector<double>(20, 0.0), 5, 4), 0.5);
  CHECK(calm.region_count() == 1);
  for (int l : calm.v) CHECK(l == 0);

  const RegionMask wall = label_regions(edge_map_from(std::vector<double>(20, 1.0), 5, 4), 0.5);
  CHECK(wall.region_count() == 1);
  for (int l : wall.v) CHECK(l == 0);
}

TEST_CASE("an absorbed edge pixel joins the lower label on a tie", "[prepost]") {
  const RegionMask m = label_regions(edge_map_from({0.0, 1.0, 0.0}, 3, 1), 0.5);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(1, 0) == 0);
  CHECK(m.at(2, 0) == 1);
}

TEST_CASE("two closed rectangles yield three regions", "[prepost]") {
  EdgeMap e{Plane(24, 18, 0.0)};
  draw_rect_outline(e, 2, 2, 9, 9);
  draw_rect_outline(e, 13, 5, 21, 14);
  const RegionMask m = label_regions(e, 0.5);
  CHECK(m.region_count() == 3);

  // background comes first in scan order, then the two interiors
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(5, 5) == 1);
  CHECK(m.at(17, 9) == 2);

  // non-edge pixels must group exactly like the brute-force flood fill
  const std::vector<int> want = oracle::flood_fill_labels(e, 0.5);
  CHECK(oracle::same_partition(want, m.v));

  const RegionMask repeat = label_regions(e, 0.5);
  CHECK(repeat.v == m.v);
}

TEST_CASE("random edge maps always produce a full contiguous partition", "[prepost]") {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 6; ++round) {
    const int w = 7 + static_cast<int>(uniform_below(rng, 18));
    const int h = 6 + static_cast<int>(uniform_below(rng, 14));
    EdgeMap e{Plane(w, h)};
    for (double& s : e.strength.v) s = uniform01(rng);
    const double threshold = round % 2 == 0 ? 0.35 : 0.65;
    CAPTURE(w, h, threshold, round);

    const RegionMask m = label_regions(e, threshold);
    std::set<int> seen;
    for (int l : m.v) {
      CHECK(l >= 0);
      seen.insert(l);
    }
    CHECK(static_cast<int>(seen.size()) == m.region_count());
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == m.region_count() - 1);

    const std::vector<int> want = oracle::flood_fill_labels(e, threshold);
    CHECK(oracle::same_partition(want, m.v));
  }
}

TEST_CASE("uniform fill averages each region to one chroma", "[prepost]") {
  // one region, half (0,0) and half (10,10)
  ChromaMap ab = ChromaMap::zeros(4, 2);
  for (int x = 2; x < 4; ++x)
    for (int y = 0; y < 2; ++y) {
      ab.a.at(x, y) = 10.0;
      ab.b.at(x, y) = 10.0;
    }
  const RegionMask one(4, 2);
  const ChromaMap filled = uniform_fill(ab, one);
  for (double v : filled.a.v) CHECK(v == 5.0);
  for (double v : filled.b.v) CHECK(v == 5.0);

  CHECK_THROWS_AS(uniform_fill(ab, RegionMask(3, 2)), shape_error);
}

TEST_CASE("uniform fill is idempotent and kills within-region variance", "[prepost]") {
  const int w = 12, h = 9;
  RegionMask regions(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) regions.at(x, y) = (x * 3) / w;  // three vertical bands
  const ChromaMap ab = random_chroma(w, h, 5);

  const ChromaMap once = uniform_fill(ab, regions);
  const ChromaMap twice = uniform_fill(once, regions);
  CHECK(once.a.v == twice.a.v);
  CHECK(once.b.v == twice.b.v);

  for (int label = 0; label < 3; ++label) {
    double first_a = 0.0, first_b = 0.0;
    double lo_a = 1e9, hi_a = -1e9;
    bool got = false;
    for (std::size_t i = 0; i < regions.v.size(); ++i) {
      if (regions.v[i] != label) continue;
      lo_a = std::min(lo_a, ab.a.v[i]);
      hi_a = std::max(hi_a, ab.a.v[i]);
      if (!got) {
        first_a = once.a.v[i];
        first_b = once.b.v[i];
        got = true;
      }
      CHECK(once.a.v[i] == first_a);  // zero variance inside the region
      CHECK(once.b.v[i] == first_b);
    }
    // the representative cannot escape the region's own value range
    CHECK(first_a >= lo_a);
    CHECK(first_a <= hi_a);
  }
}

TEST_CASE("the median aggregator picks the middle value", "[prepost]") {
  ChromaMap odd = ChromaMap::zeros(3, 1);
  odd.a.v = {1.0, 100.0, 9.0};
  odd.b.v = {2.0, 4.0, 6.0};
  const ChromaMap m_odd = uniform_fill(odd, RegionMask(3, 1), Aggregator::median);
  for (double v : m_odd.a.v) CHECK(v == 9.0);
  for (double v : m_odd.b.v) CHECK(v == 4.0);

  ChromaMap even = ChromaMap::zeros(4, 1);
  even.a.v = {9.0, 1.0, 7.0, 3.0};
  even.b.v = {0.0, 0.0, 0.0, 0.0};
  const ChromaMap m_even = uniform_fill(even, RegionMask(4, 1), Aggregator::median);
  for (double v : m_even.a.v) CHECK(v == 5.0);  // (3 + 7) / 2
}

TEST_CASE("pixels sharing a luminance bin get identical chroma", "[prepost]") {
  // the two-pixel example: same L, chroma (10,10) and (20,20) -> (15,15)
  Plane l(2, 1, 50.0);
  ChromaMap ab = ChromaMap::zeros(2, 1);
  ab.a.v = {10.0, 20.0};
  ab.b.v = {10.0, 20.0};
  const ChromaMap out = enforce_same_l_same_ab(l, ab, 1.0);
  CHECK(out.a.v == std::vector<double>{15.0, 15.0});
  CHECK(out.b.v == std::vector<double>{15.0, 15.0});

  // all pixels in distinct bins: nothing changes, bit for bit
  Plane spread(6, 1);
  for (int x = 0; x < 6; ++x) spread.at(x, 0) = 5.0 * x;
  const ChromaMap before = random_chroma(6, 1, 9);
  const ChromaMap after = enforce_same_l_same_ab(spread, before, 1.0);
  CHECK(after.a.v == before.a.v);
  CHECK(after.b.v == before.b.v);
}

TEST_CASE("luminance bins are floor(L / width)", "[prepost]") {
  CHECK(luminance_bin(0.0, 1.0) == 0);
  CHECK(luminance_bin(7.9, 2.0) == 3);
  CHECK(luminance_bin(8.0, 2.0) == 4);
  CHECK(luminance_bin(99.999, 100.0) == 0);
}

TEST_CASE("the same-L constraint is idempotent and exact per bin", "[prepost]") {
  const int w = 15, h = 11;
  const Plane l = random_l(w, h, 21);
  const ChromaMap ab = random_chroma(w, h, 22);
  const double width = 5.0;

  const ChromaMap once = enforce_same_l_same_ab(l, ab, width);
  const ChromaMap twice = enforce_same_l_same_ab(l, once, width);
  CHECK(once.a.v == twice.a.v);
  CHECK(once.b.v == twice.b.v);

  for (std::size_t i = 0; i < l.v.size(); ++i)
    for (std::size_t j = i + 1; j < l.v.size(); ++j)
      if (luminance_bin(l.v[i], width) == luminance_bin(l.v[j], width)) {
        CHECK(once.a.v[i] == once.a.v[j]);
        CHECK(once.b.v[i] == once.b.v[j]);
      }

  CHECK_THROWS_AS(enforce_same_l_same_ab(l, ab, 0.0), argument_error);
  CHECK_THROWS_AS(enforce_same_l_same_ab(Plane(w + 1, h), ab, 1.0), shape_error);
  CHECK_THROWS_AS(enforce_same_l_same_ab(l, ab, 1.0, RegionMask(3, 3)), shape_error);
}

TEST_CASE("regions keep their own chroma under the same-L constraint", "[prepost]") {
  const int w = 8, h = 4;
  const Plane l(w, h, 50.0);  // every pixel in the same bin
  RegionMask halves(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = w / 2; x < w; ++x) halves.at(x, y) = 1;
  ChromaMap ab = ChromaMap::zeros(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      ab.a.at(x, y) = x < w / 2 ? 10.0 + y : -30.0 + y;
      ab.b.at(x, y) = x < w / 2 ? 5.0 : 60.0;
    }
  const ChromaMap out = enforce_same_l_same_ab(l, ab, 1.0, halves);
  const double left_a = out.a.at(0, 0), right_a = out.a.at(w - 1, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      CHECK(out.a.at(x, y) == (x < w / 2 ? left_a : right_a));
      CHECK(out.b.at(x, y) == (x < w / 2 ? 5.0 : 60.0));
    }
  CHECK(left_a != right_a);
}

TEST_CASE("adaptive thresholding against the windowed-mean oracle", "[prepost]") {
  // constant image, any positive offset: everything is foreground
  const RegionMask all = adaptive_threshold(Plane(7, 5, 40.0), 3, 0.5);
  for (int v : all.v) CHECK(v == 1);

  CHECK_THROWS_AS(adaptive_threshold(Plane(7, 5, 40.0), 4, 0.0), argument_error);
  CHECK_THROWS_AS(adaptive_threshold(Plane(7, 5, 40.0), 1, 0.0), argument_error);

  // bright square on a dark field, window wider than the square
  Plane scene(30, 30, 10.0);
  for (int y = 10; y < 20; ++y)
    for (int x = 10; x < 20; ++x) scene.at(x, y) = 90.0;
  const RegionMask seg = adaptive_threshold(scene, 31, 0.0);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) {
      CAPTURE(x, y);
      const bool in_square = x >= 10 && x < 20 && y >= 10 && y < 20;
      CHECK(seg.at(x, y) == (in_square ? 1 : 0));
    }

  // pixel-for-pixel agreement with the replicated-border mean
  const Plane noisy = random_l(13, 9, 33);
  const double offset = 2.0;
  const RegionMask got = adaptive_threshold(noisy, 5, offset);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 13; ++x) {
      CHECK((got.at(x, y) == 0 || got.at(x, y) == 1));
      const double mean = oracle::window_mean(noisy, x, y, 5);
      CHECK(got.at(x, y) == (noisy.at(x, y) > mean - offset ? 1 : 0));
    }
}

TEST_CASE("masks survive the grayscale-image round trip", "[prepost]") {
  RegionMask m(6, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) m.at(x, y) = (x + y) % 4;
  const RegionMask back = mask_from_image(mask_to_image(m));
  CHECK(back.v == m.v);

  RgbImage tinted(1, 1);
  std::uint8_t* p = tinted.pixel(0, 0);
  p[0] = 10;
  p[1] = 20;
  p[2] = 30;
  CHECK(mask_from_image(tinted).at(0, 0) == 20);
}
