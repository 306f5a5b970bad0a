#include <random>

#include <gtest/gtest.h>

#include "dualfuse/bbox.hpp"
#include "dualfuse/polygon.hpp"
#include "oracles.hpp"

using namespace dualfuse;

namespace {

BBox box(double x0, double y0, double x1, double y1) {
  BBox b;
  b.x_min = x0;
  b.y_min = y0;
  b.x_max = x1;
  b.y_max = y1;
  return b;
}

std::vector<oracle::Pt> as_points(const ConvexPolygon& p) {
  std::vector<oracle::Pt> out;
  for (const auto& v : p.vertices) out.emplace_back(v.x(), v.y());
  return out;
}

}  // namespace

TEST(BBox, AreaAndIou) {
  EXPECT_EQ(box_area(box(0, 0, 1, 1)), 1.0);
  EXPECT_EQ(iou_boxes(box(0, 0, 2, 2), box(0, 0, 2, 2)), 1.0);
  EXPECT_EQ(iou_boxes(box(0, 0, 1, 1), box(2, 2, 3, 3)), 0.0);
  EXPECT_NEAR(iou_boxes(box(0, 0, 2, 2), box(1, 1, 3, 3)), 1.0 / 7.0, 1e-15);
  EXPECT_EQ(iou_boxes(box(0, 0, 1, 1), box(1, 0, 2, 1)), 0.0);  // shared edge only
}

TEST(BBox, Validation) {
  EXPECT_TRUE(box(0, 0, 1, 1).is_valid());
  EXPECT_FALSE(box(1, 0, 1, 1).is_valid());
  BBox b = box(0, 0, 1, 1);
  b.confidence = 1.5;
  EXPECT_THROW(b.validate(), InvariantViolation);
}

TEST(BBox, ClassLabels) {
  EXPECT_EQ(ClassLabel::from_name("green-LEFT").name(), "Green-left");
  EXPECT_TRUE(ClassLabel::from_name("Red-yellow").known());
  const ClassLabel open = ClassLabel::from_name("Pedestrian");
  EXPECT_FALSE(open.known());
  EXPECT_EQ(open.name(), "Pedestrian");
  EXPECT_EQ(kTrafficLightClassNames.size(), 10u);
  EXPECT_EQ(ClassLabel(TrafficLightClass::Green), ClassLabel::from_name("green"));
}

TEST(Polygon, Areas) {
  EXPECT_EQ(polygon_area(ConvexPolygon{}), 0.0);
  EXPECT_EQ(polygon_area(ConvexPolygon{{{0, 0}, {4, 0}, {0, 3}}}), 6.0);
  EXPECT_EQ(polygon_area(ConvexPolygon::from_box(box(0, 0, 1, 1))), 1.0);
  EXPECT_GT(signed_area(ConvexPolygon::from_box(box(0, 0, 1, 1)).vertices), 0.0);
}

TEST(Polygon, HullDropsInteriorAndCollinear) {
  const ConvexPolygon h = convex_hull({{0, 0}, {2, 0}, {4, 0}, {4, 4}, {0, 4}, {1, 1}, {2, 3}, {0, 2}});
  ASSERT_EQ(h.vertices.size(), 4u);
  EXPECT_EQ(polygon_area(h), 16.0);
  EXPECT_GT(signed_area(h.vertices), 0.0);
  EXPECT_TRUE(convex_hull({{0, 0}, {1, 1}, {2, 2}}).empty());
}

TEST(Polygon, ClipExamples) {
  const ConvexPolygon square = ConvexPolygon::from_box(box(1, 1, 3, 3));
  const ConvexPolygon c = clip_convex(ConvexPolygon::from_box(box(0, 0, 2, 2)), square);
  EXPECT_NEAR(polygon_area(c), 1.0, 1e-15);
  EXPECT_TRUE(clip_convex(ConvexPolygon::from_box(box(5, 5, 6, 6)), square).empty());
  const ConvexPolygon inside = clip_convex(ConvexPolygon::from_box(box(1.5, 1.5, 2.5, 2.5)), square);
  EXPECT_EQ(inside.vertices.size(), 4u);
  EXPECT_NEAR(polygon_area(inside), 1.0, 1e-15);
}

TEST(Polygon, ClipMatchesAxisClipOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 500; ++i) {
    std::vector<PixelPoint> pts;
    for (int k = 0; k < 8; ++k) pts.emplace_back(u(rng), u(rng));
    const ConvexPolygon poly = convex_hull(pts);
    double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    if (x1 - x0 < 1e-3 || y1 - y0 < 1e-3) continue;
    const double expected = oracle::area_in_rect(as_points(poly), x0, y0, x1, y1);
    EXPECT_NEAR(polygon_area(clip_to_box(poly, box(x0, y0, x1, y1))), expected, 1e-9 * (1 + expected));
    EXPECT_NEAR(polygon_area(clip_convex(ConvexPolygon::from_box(box(x0, y0, x1, y1)), poly)), expected,
                1e-9 * (1 + expected));
  }
}

TEST(Polygon, ContainsMatchesCrossingNumber) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0, 100);
  std::vector<PixelPoint> pts;
  for (int k = 0; k < 12; ++k) pts.emplace_back(u(rng), u(rng));
  const ConvexPolygon poly = convex_hull(pts);
  const auto ref = as_points(poly);
  for (int i = 0; i < 2000; ++i) {
    const PixelPoint p(u(rng), u(rng));
    EXPECT_EQ(contains_point(poly, p), oracle::inside_closed(ref, p, 0.0));
  }
  for (const auto& v : poly.vertices) EXPECT_TRUE(contains_point(poly, v));
}
