#include <random>

#include <gtest/gtest.h>

#include "dualfuse/boxwarp.hpp"
#include "dualfuse/synthrig.hpp"

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

// K = I (fx = fy = 1, principal point at the origin) on both sides.
TransformChain ideal_chain(const Eigen::Matrix3d& h) {
  CameraIntrinsics k{1, 1, 0, 0, 1920, 1080};
  return TransformChain{k, {}, k, {}, Homography(h)};
}

BBox random_box(std::mt19937_64& rng, double w = 1920, double h = 1080) {
  std::uniform_real_distribution<double> x(0, w - 60), y(0, h - 60), s(2, 60);
  BBox b = box(0, 0, 0, 0);
  b.x_min = x(rng);
  b.y_min = y(rng);
  b.x_max = b.x_min + s(rng);
  b.y_max = b.y_min + s(rng);
  b.confidence = std::uniform_real_distribution<double>(0, 1)(rng);
  b.label = static_cast<TrafficLightClass>(std::uniform_int_distribution<int>(0, 9)(rng));
  return b;
}

}  // namespace

TEST(TransformPoint, IdentityChain) {
  const auto chain = ideal_chain(Eigen::Matrix3d::Identity());
  EXPECT_EQ(transform_point(PixelPoint(12.5, -3.25), chain), PixelPoint(12.5, -3.25));
}

TEST(TransformPoint, ZeroDistortionEqualsHomography) {
  const auto kn = CameraIntrinsics::from_hfov(48, 1920, 1080);
  const auto kw = CameraIntrinsics::from_hfov(125, 1920, 1080);
  Eigen::Matrix3d m;
  m << 0.25, 0.01, 700, -0.02, 0.24, 420, 1e-6, 2e-6, 1;
  const Homography h(m);
  const auto chain = TransformChain::undistorted(kn, kw, h);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(0, 1920), y(0, 1080);
  for (int i = 0; i < 100; ++i) {
    const PixelPoint p(x(rng), y(rng));
    EXPECT_LT((transform_point(p, chain) - apply_homography(h, p)).norm(), 1e-9);
  }
}

TEST(TransformPoint, RigPlanePointMatchesDirectProjection) {
  const RigSpec rig = RigSpec::default_rig();
  const TransformChain chain = rig.chain();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d x(14 * u(rng), 7 * u(rng), rig.plane.distance);
    const PixelPoint pn = project_point(x, rig.narrow, rig.narrow_distortion);
    const PixelPoint pw = project_point(rig.pose.apply(x), rig.wide, rig.wide_distortion);
    EXPECT_LT((transform_point(pn, chain) - pw).norm(), 1e-6);
  }
}

TEST(TransformBox, IdentityAndScale) {
  BBox b = box(10, 10, 20, 20);
  b.label = TrafficLightClass::Yellow;
  b.confidence = 0.37;
  EXPECT_EQ(transform_bbox(b, ideal_chain(Eigen::Matrix3d::Identity())), b);
  const BBox s = transform_bbox(b, ideal_chain(Eigen::Vector3d(2, 2, 1).asDiagonal()));
  EXPECT_EQ(s.x_min, 20);
  EXPECT_EQ(s.y_min, 20);
  EXPECT_EQ(s.x_max, 40);
  EXPECT_EQ(s.y_max, 40);
  EXPECT_EQ(s.label, b.label);
  EXPECT_EQ(s.confidence, b.confidence);
}

namespace {

// (x, y) -> (100 x, 100 y) / (x + 1): boxes far to the right collapse toward x = 100.
Eigen::Matrix3d horizon_map() {
  Eigen::Matrix3d m = 100 * Eigen::Matrix3d::Identity();
  m(2, 0) = 1.0;
  m(2, 2) = 1.0;
  return m;
}

}  // namespace

TEST(TransformBox, DegenerateNearHorizon) {
  EXPECT_THROW(transform_bbox(box(1000, 10, 1010, 12), ideal_chain(horizon_map())), DegenerateBox);
  EXPECT_NO_THROW(transform_bbox(box(0, 0, 10, 10), ideal_chain(horizon_map())));
}

TEST(TransformBox, RigGroundTruthOverlap) {
  const RigSpec rig = RigSpec::default_rig();
  const TransformChain chain = rig.chain();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    SceneObject o;
    o.center = Eigen::Vector3d(6 * u(rng), 3 * u(rng), rig.plane.distance);
    o.width = 0.4;
    o.height = 1.0;
    const auto n = project_object(o, RelativePose{}, rig.narrow, rig.narrow_distortion);
    const auto w = project_object(o, rig.pose, rig.wide, rig.wide_distortion);
    ASSERT_TRUE(n && w);
    EXPECT_GT(iou_boxes(transform_bbox(*n, chain), *w), 0.9);
  }
}

TEST(TransformBox, NestingMonotoneForIdealCameras) {
  Eigen::Matrix3d m;
  m << 0.9, 0.05, 30, -0.03, 1.1, -20, 1e-5, -2e-5, 1;
  const auto chain = ideal_chain(m);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> f(0.05, 0.45);
  for (int i = 0; i < 200; ++i) {
    const BBox outer = random_box(rng);
    BBox inner = outer;
    inner.x_min += f(rng) * outer.width();
    inner.x_max -= f(rng) * outer.width();
    inner.y_min += f(rng) * outer.height();
    inner.y_max -= f(rng) * outer.height();
    if (inner.width() < 2 || inner.height() < 2) continue;  // would collapse below 1 px
    const BBox a = transform_bbox(outer, chain);
    const BBox b = transform_bbox(inner, chain);
    EXPECT_LE(a.x_min, b.x_min);
    EXPECT_LE(a.y_min, b.y_min);
    EXPECT_GE(a.x_max, b.x_max);
    EXPECT_GE(a.y_max, b.y_max);
  }
}

TEST(TransformSet, EmptySingletonAndIdentity) {
  const auto id = ideal_chain(Eigen::Matrix3d::Identity());
  EXPECT_TRUE(transform_detection_set({}, id).boxes.empty());

  const RigSpec rig = RigSpec::default_rig();
  const BBox one = box(900, 500, 930, 560);
  const auto single = transform_detection_set(std::vector<BBox>{one}, rig.chain());
  ASSERT_EQ(single.boxes.size(), 1u);
  EXPECT_EQ(single.boxes[0], transform_bbox(one, rig.chain()));

  std::mt19937_64 rng(5);
  std::vector<BBox> boxes;
  for (int i = 0; i < 50; ++i) boxes.push_back(random_box(rng));
  const auto out = transform_detection_set(boxes, id);
  EXPECT_EQ(out.boxes, boxes);
  EXPECT_EQ(out.dropped, 0u);
}

TEST(TransformSet, DropsDegenerateAndKeepsOrder) {
  const std::vector<BBox> boxes{box(0, 0, 10, 10), box(1000, 10, 1010, 12), box(20, 20, 40, 40)};
  const auto out = transform_detection_set(boxes, ideal_chain(horizon_map()));
  ASSERT_EQ(out.boxes.size(), 2u);
  EXPECT_EQ(out.dropped, 1u);
  EXPECT_EQ(out.source_index, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(out.boxes[0].x_max, 1000.0 / 11.0, 1e-9);
}
