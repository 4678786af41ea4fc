#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <microcolor/colorspace.hpp>
#include <microcolor/rng.hpp>

#include "oracles.hpp"

using namespace microcolor;

namespace {

// Literals computed with the independent classic-formulation oracle (rounded
// D65 white, 0.008856/7.787 thresholds); frozen here so a regression in
// either implementation shows up as a number, not a silent agreement.
struct Known {
  std::uint8_t r, g, b;
  double L, A, B;
};
constexpr Known kKnownColors[] = {
    {255, 0, 0, 53.240794, 80.092460, 67.203197},
    {0, 255, 0, 87.734722, -86.182716, 83.179321},
    {0, 0, 255, 32.297011, 79.187520, -107.860162},
    {128, 128, 128, 53.585016, 0.0, 0.0},
};

}  // namespace

TEST_CASE("primary colors and mid-gray hit the reference LAB values", "[colorspace]") {
  for (const Known& k : kKnownColors) {
    double L, A, B;
    rgb_to_lab_pixel(k.r, k.g, k.b, L, A, B);
    CAPTURE((int)k.r, (int)k.g, (int)k.b);
    CHECK(L == Catch::Approx(k.L).margin(1e-3));
    CHECK(A == Catch::Approx(k.A).margin(1e-3));
    CHECK(B == Catch::Approx(k.B).margin(1e-3));
  }
}

TEST_CASE("white and black are the LAB anchors", "[colorspace]") {
  double L, A, B;
  rgb_to_lab_pixel(255, 255, 255, L, A, B);
  CHECK(L == Catch::Approx(100.0).margin(1e-6));
  CHECK(std::abs(A) < 1e-9);
  CHECK(std::abs(B) < 1e-9);
  rgb_to_lab_pixel(0, 0, 0, L, A, B);
  CHECK(std::abs(L) < 1e-9);
  CHECK(std::abs(A) < 1e-9);
  CHECK(std::abs(B) < 1e-9);

  std::uint8_t r, g, b;
  lab_to_rgb_pixel(100.0, 0.0, 0.0, r, g, b);
  CHECK((int)r == 255);
  CHECK((int)g == 255);
  CHECK((int)b == 255);
  lab_to_rgb_pixel(0.0, 0.0, 0.0, r, g, b);
  CHECK((int)r == 0);
  CHECK((int)g == 0);
  CHECK((int)b == 0);
}

TEST_CASE("library agrees with the textbook oracle", "[colorspace]") {
  // all neutral grays
  for (int v = 0; v < 256; ++v) {
    double L1, A1, B1, L2, A2, B2;
    rgb_to_lab_pixel(v, v, v, L1, A1, B1);
    oracle::rgb_to_lab(v, v, v, L2, A2, B2);
    CAPTURE(v);
    CHECK(std::abs(L1 - L2) < 0.05);
    CHECK(std::abs(A1 - A2) < 0.05);
    CHECK(std::abs(B1 - B2) < 0.05);
  }
  // and a seeded random sweep
  std::mt19937_64 rng(321);
  for (int i = 0; i < 500; ++i) {
    const auto r = static_cast<std::uint8_t>(uniform_below(rng, 256));
    const auto g = static_cast<std::uint8_t>(uniform_below(rng, 256));
    const auto b = static_cast<std::uint8_t>(uniform_below(rng, 256));
    double L1, A1, B1, L2, A2, B2;
    rgb_to_lab_pixel(r, g, b, L1, A1, B1);
    oracle::rgb_to_lab(r, g, b, L2, A2, B2);
    CAPTURE((int)r, (int)g, (int)b);
    CHECK(std::abs(L1 - L2) < 0.05);
    CHECK(std::abs(A1 - A2) < 0.05);
    CHECK(std::abs(B1 - B2) < 0.05);
  }
}

TEST_CASE("round trip error stays within one 8-bit step", "[colorspace]") {
  auto check = [](std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double L, A, B;
    rgb_to_lab_pixel(r, g, b, L, A, B);
    std::uint8_t r2, g2, b2;
    lab_to_rgb_pixel(L, A, B, r2, g2, b2);
    CAPTURE((int)r, (int)g, (int)b);
    CHECK(std::abs((int)r - (int)r2) <= 1);
    CHECK(std::abs((int)g - (int)g2) <= 1);
    CHECK(std::abs((int)b - (int)b2) <= 1);
  };
  for (int v = 0; v < 256; ++v) check(v, v, v);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i)
    check(static_cast<std::uint8_t>(uniform_below(rng, 256)),
          static_cast<std::uint8_t>(uniform_below(rng, 256)),
          static_cast<std::uint8_t>(uniform_below(rng, 256)));
}

TEST_CASE("neutral inputs have zero chroma and zero saturation", "[colorspace]") {
  double prev_l = -1.0;
  for (int v = 0; v < 256; ++v) {
    double L, A, B;
    rgb_to_lab_pixel(v, v, v, L, A, B);
    CAPTURE(v);
    CHECK(std::abs(A) < 1e-9);
    CHECK(std::abs(B) < 1e-9);
    CHECK(L > prev_l);  // strictly increasing along the gray ramp
    prev_l = L;
  }
  const HsvImage hsv = rgb_to_hsv(RgbImage::filled(3, 2, 128, 128, 128));
  for (double s : hsv.s.v) CHECK(s == 0.0);
  for (double v : hsv.v.v) CHECK(v == Catch::Approx(128.0 / 255.0));
}

TEST_CASE("HSV hits the hexcone corners", "[colorspace]") {
  const HsvImage red = rgb_to_hsv(RgbImage::filled(1, 1, 255, 0, 0));
  CHECK(red.h.at(0, 0) == Catch::Approx(0.0).margin(1e-12));
  CHECK(red.s.at(0, 0) == 1.0);
  CHECK(red.v.at(0, 0) == 1.0);
  const HsvImage green = rgb_to_hsv(RgbImage::filled(1, 1, 0, 255, 0));
  CHECK(green.h.at(0, 0) == Catch::Approx(120.0));
  CHECK(green.s.at(0, 0) == 1.0);
  CHECK(green.v.at(0, 0) == 1.0);
  const HsvImage blue = rgb_to_hsv(RgbImage::filled(1, 1, 0, 0, 255));
  CHECK(blue.h.at(0, 0) == Catch::Approx(240.0));
}

TEST_CASE("LabImage rejects out-of-range planes", "[colorspace]") {
  Plane l(2, 2, 50.0), a(2, 2, 200.0), b(2, 2, 0.0);
  CHECK_THROWS_AS(LabImage::create(l, a, b), argument_error);
  Plane l2(2, 2, 150.0);
  CHECK_THROWS_AS(LabImage::create(l2, Plane(2, 2), Plane(2, 2)), argument_error);
  CHECK_THROWS_AS(LabImage::create(Plane(2, 2), Plane(3, 3), Plane(2, 2)), argument_error);
}

TEST_CASE("split and merge are exact inverses", "[colorspace]") {
  LabImage img = LabImage::create(Plane(4, 3, 40.0), Plane(4, 3, 3.0), Plane(4, 3, -7.0));
  img.a.at(2, 1) = 12.5;
  img.b.at(0, 2) = -30.25;
  const auto [l, ab] = split_l_ab(img);
  CHECK(l == img.l);
  CHECK(ab.a == img.a);
  CHECK(ab.b == img.b);
  CHECK(merge_l_ab(l, ab) == img);

  // the 1x1 componentwise case
  const LabImage tiny = LabImage::create(Plane(1, 1, 40.0), Plane(1, 1, 3.0), Plane(1, 1, -7.0));
  const auto [tl, tab] = split_l_ab(tiny);
  CHECK(tl.at(0, 0) == 40.0);
  CHECK(tab.a.at(0, 0) == 3.0);
  CHECK(tab.b.at(0, 0) == -7.0);

  // constant-gray image carries no chroma
  const auto [gl, gab] = split_l_ab(LabImage::create(Plane(3, 3, 55.0), Plane(3, 3), Plane(3, 3)));
  for (double v : gab.a.v) CHECK(v == 0.0);
  for (double v : gab.b.v) CHECK(v == 0.0);
}

TEST_CASE("merge refuses mismatched planes", "[colorspace]") {
  CHECK_THROWS_AS(merge_l_ab(Plane(2, 2, 50.0), ChromaMap::zeros(3, 3)), shape_error);
}
