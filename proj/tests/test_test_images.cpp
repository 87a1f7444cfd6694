#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "carrierseg/test_images.hpp"

using namespace carrierseg;

namespace {

std::set<double> levels(const GrayImage& img) { return {img.intensities.begin(), img.intensities.end()}; }

}  // namespace

TEST_CASE("TwoHalves 4x2") {
  const GrayImage img = make_test_image(TestImageKind::TwoHalves, 4, 2);
  CHECK(img.intensities == std::vector<double>{0.3, 0.3, 0.7, 0.7, 0.3, 0.3, 0.7, 0.7});
}

TEST_CASE("TwoHalves layout") {
  const GrayImage img = make_test_image(TestImageKind::TwoHalves, 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) CHECK(img.at(x, y) == (x < 4 ? 0.3 : 0.7));
  CHECK(levels(make_test_image(TestImageKind::TwoHalves, 9, 8)) == std::set<double>{0.3, 0.7});
}

TEST_CASE("Rectangle 8x8") {
  const GrayImage img = make_test_image(TestImageKind::Rectangle, 8, 8);
  const auto dark = std::count(img.intensities.begin(), img.intensities.end(), 0.3);
  const auto bright = std::count(img.intensities.begin(), img.intensities.end(), 0.7);
  CHECK(dark == 16);
  CHECK(bright == 48);
  for (std::size_t y = 2; y < 6; ++y)
    for (std::size_t x = 2; x < 6; ++x) CHECK(img.at(x, y) == 0.3);
}

TEST_CASE("ThreeShapes layout") {
  const GrayImage img = make_test_image(TestImageKind::ThreeShapes, 96, 96);
  CHECK(levels(img) == std::set<double>{0.2, 0.3, 0.4, 0.8});
  for (std::size_t i = 0; i < 96; ++i) {
    CHECK(img.at(i, 0) == 0.8);
    CHECK(img.at(0, i) == 0.8);
    CHECK(img.at(i, 95) == 0.8);
    CHECK(img.at(95, i) == 0.8);
  }
  // No two distinct shape levels within Chebyshev distance 2.
  for (std::size_t y = 0; y < 96; ++y)
    for (std::size_t x = 0; x < 96; ++x) {
      const double v = img.at(x, y);
      if (v == 0.8) continue;
      for (std::size_t yy = y > 2 ? y - 2 : 0; yy <= std::min<std::size_t>(95, y + 2); ++yy)
        for (std::size_t xx = x > 2 ? x - 2 : 0; xx <= std::min<std::size_t>(95, x + 2); ++xx) {
          const double u = img.at(xx, yy);
          CHECK((u == 0.8 || u == v));
        }
    }
}

TEST_CASE("ThreeShapes at other sizes") {
  CHECK(levels(make_test_image(TestImageKind::ThreeShapes, 64, 48)).size() == 4);
  CHECK(levels(make_test_image(TestImageKind::ThreeShapes, 200, 120)).size() == 4);
  CHECK_THROWS_AS(make_test_image(TestImageKind::ThreeShapes, 8, 8), GeometryError);
}

TEST_CASE("too small") {
  CHECK_THROWS_AS(make_test_image(TestImageKind::Rectangle, 1, 8), GeometryError);
  CHECK_THROWS_AS(make_test_image(TestImageKind::TwoHalves, 8, 1), GeometryError);
  CHECK_THROWS_AS(make_test_image(TestImageKind::ThreeShapes, 9, 9), GeometryError);
}

TEST_CASE("kind names") {
  for (auto k : {TestImageKind::TwoHalves, TestImageKind::Rectangle, TestImageKind::ThreeShapes})
    CHECK(parse_test_image_kind(to_string(k)) == k);
  CHECK_FALSE(parse_test_image_kind("Circle").has_value());
}
