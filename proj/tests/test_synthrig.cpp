#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dualfuse/synthrig.hpp"

using namespace dualfuse;

namespace {

SceneObject object_at(double x, double y, double z) {
  SceneObject o;
  o.center = Eigen::Vector3d(x, y, z);
  o.width = 0.4;
  o.height = 1.0;
  return o;
}

ExperimentConfig zero_noise_config(std::size_t trials) {
  ExperimentConfig c;
  c.trials = trials;
  c.narrow_noise = DetectorNoiseModel::perfect();
  c.wide_noise = DetectorNoiseModel::perfect();
  return c;
}

}  // namespace

TEST(Rig, DefaultIsValidAndConsistent) {
  const RigSpec rig = RigSpec::default_rig();
  EXPECT_NO_THROW(rig.validate());
  EXPECT_EQ(rig.narrow.width, 1920);
  EXPECT_EQ(rig.wide.height, 1080);
  EXPECT_NEAR(rig.narrow.fx / rig.wide.fx,
              std::tan(62.5 * std::numbers::pi / 180) / std::tan(24.0 * std::numbers::pi / 180), 1e-12);
  EXPECT_EQ(rig.bundle().homography.matrix(), rig.homography().matrix());
}

TEST(Seeds, DeriveSeedIsStableAndSpreads) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
}

TEST(Scene, CountAndDeterminism) {
  SceneParams p;
  p.count = 0;
  EXPECT_TRUE(generate_scene(p, 1).empty());
  p.count = 12;
  const auto a = generate_scene(p, 5), b = generate_scene(p, 5), c = generate_scene(p, 6);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].center, b[i].center);
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_GE(a[i].center.z(), p.depth_min);
    EXPECT_LE(a[i].center.z(), p.depth_max);
    EXPECT_GE(a[i].width, p.width_min);
    EXPECT_LE(a[i].height, p.height_max);
  }
  EXPECT_NE(a[0].center, c[0].center);
}

TEST(Scene, ClassFrequenciesFollowWeights) {
  SceneParams p;
  p.count = 20000;
  const auto scene = generate_scene(p, 11);
  std::array<double, kTrafficLightClassCount> counts{};
  for (const auto& o : scene) {
    for (std::size_t k = 0; k < kTrafficLightClassCount; ++k)
      if (o.label == ClassLabel(static_cast<TrafficLightClass>(k))) counts[k] += 1;
  }
  double total = 0;
  for (double w : p.class_weights) total += w;
  for (std::size_t k = 0; k < kTrafficLightClassCount; ++k) {
    const double prob = p.class_weights[k] / total;
    const double sigma = std::sqrt(p.count * prob * (1 - prob));
    EXPECT_LE(std::abs(counts[k] - p.count * prob), 3 * sigma) << kTrafficLightClassNames[k];
  }
}

TEST(Scene, InvalidParams) {
  SceneParams p;
  p.depth_min = 0.5;
  EXPECT_THROW(p.validate(), InvariantViolation);
  p = SceneParams{};
  p.depth_max = p.depth_min - 1;
  EXPECT_THROW(p.validate(), InvariantViolation);
}

TEST(Projection, OnAxisSizeRatio) {
  const RigSpec rig = RigSpec::default_rig();
  const auto gt = project_ground_truth({object_at(0, 0, 30)}, rig);
  ASSERT_EQ(gt.narrow.boxes.size(), 1u);
  ASSERT_EQ(gt.wide.boxes.size(), 1u);
  const double ratio = gt.narrow.boxes[0].height() / gt.wide.boxes[0].height();
  EXPECT_NEAR(ratio, rig.narrow.fx / rig.wide.fx, 0.05 * rig.narrow.fx / rig.wide.fx);
  EXPECT_EQ(gt.common.boxes.size(), 1u);
  EXPECT_EQ(gt.common.boxes[0], gt.wide.boxes[0]);
}

TEST(Projection, WideOnlyAtSixtyDegrees) {
  const RigSpec rig = RigSpec::default_rig();
  const double z = 20;
  const auto gt = project_ground_truth({object_at(z * std::tan(std::numbers::pi / 3), 0, z)}, rig);
  EXPECT_TRUE(gt.narrow.boxes.empty());
  EXPECT_EQ(gt.wide.boxes.size(), 1u);
  EXPECT_EQ(gt.common.boxes.size(), 1u);
}

TEST(Projection, BehindCameraIsInvisible) {
  const RigSpec rig = RigSpec::default_rig();
  const auto gt = project_ground_truth({object_at(0, 0, -10)}, rig);
  EXPECT_TRUE(gt.narrow.boxes.empty());
  EXPECT_TRUE(gt.wide.boxes.empty());
  EXPECT_TRUE(gt.common.boxes.empty());
}

TEST(Projection, CommonGroundTruthBounds) {
  const RigSpec rig = RigSpec::default_rig();
  SceneParams p;
  p.count = 15;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto scene = generate_scene(p, s);
    const auto gt = project_ground_truth(scene, rig);
    EXPECT_GE(gt.common.boxes.size(), gt.wide.boxes.size());
    EXPECT_LE(gt.common.boxes.size(), gt.wide.boxes.size() + gt.narrow.boxes.size());
    EXPECT_LE(gt.common.boxes.size(), scene.size());
    EXPECT_EQ(gt.common_object.size(), gt.common.boxes.size());
    for (const auto& b : gt.wide.boxes) {
      EXPECT_GE(b.x_min, 0);
      EXPECT_LE(b.x_max, rig.wide.width);
      EXPECT_GE(b.width(), 1.0);
    }
  }
}

TEST(Noise, PerfectReturnsGroundTruth) {
  const RigSpec rig = RigSpec::default_rig();
  SceneParams p;
  const auto gt = project_ground_truth(generate_scene(p, 3), rig);
  const auto dets = simulate_detections(gt.wide, DetectorNoiseModel::perfect(), 1920, 1080);
  ASSERT_EQ(dets.size(), gt.wide.boxes.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(dets[i].x_min, gt.wide.boxes[i].x_min);
    EXPECT_EQ(dets[i].y_max, gt.wide.boxes[i].y_max);
    EXPECT_EQ(dets[i].confidence, 1.0);
  }
}

TEST(Noise, FullDropoutIsEmpty) {
  DetectorNoiseModel m = DetectorNoiseModel::perfect();
  m.dropout_base = 1.0;
  Frame f{"f", {}};
  for (int i = 0; i < 20; ++i) {
    BBox b;
    b.x_min = 10.0 * i;
    b.y_min = 0;
    b.x_max = b.x_min + 5;
    b.y_max = 40;
    f.boxes.push_back(b);
  }
  EXPECT_TRUE(simulate_detections(f, m, 1920, 1080).empty());
}

TEST(Noise, DropoutCurve) {
  DetectorNoiseModel m;
  EXPECT_NEAR(m.dropout_probability(m.dropout_scale), m.dropout_base + (1 - m.dropout_base) / 2, 1e-12);
  EXPECT_GT(m.dropout_probability(2), 0.9);
  EXPECT_LT(m.dropout_probability(100), m.dropout_base + 1e-9);
  m.dropout_softness = 0;
  EXPECT_EQ(m.dropout_probability(m.dropout_scale - 1), 1.0);
  EXPECT_EQ(m.dropout_probability(m.dropout_scale + 1), m.dropout_base);
  m.dropout_base = 1.5;
  EXPECT_THROW(m.validate(), InvariantViolation);
}

TEST(Noise, EmpiricalSurvivalRate) {
  DetectorNoiseModel m;
  m.false_positives_per_frame = 0;
  m.jitter_sigma = 0;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> h(2, 40);
  Frame f{"f", {}};
  double expected = 0;
  for (int i = 0; i < 10000; ++i) {
    BBox b;
    b.x_min = 100;
    b.y_min = 100;
    b.x_max = 110;
    b.y_max = 100 + h(rng);
    expected += 1 - m.dropout_probability(b.height());
    f.boxes.push_back(b);
  }
  m.rng_seed = 1234;
  const double survived = double(simulate_detections(f, m, 1920, 1080).size());
  EXPECT_NEAR(survived / 10000, expected / 10000, 0.02);
}

TEST(Noise, ConfidenceAndJitterBounds) {
  DetectorNoiseModel m;
  m.dropout_base = 0;
  m.dropout_scale = 0;
  m.dropout_softness = 0;
  m.jitter_sigma = 3;
  m.false_positives_per_frame = 2;
  Frame f{"f", {}};
  for (int i = 0; i < 200; ++i) {
    BBox b;
    b.x_min = 5.0 * i;
    b.y_min = 50;
    b.x_max = b.x_min + 3;
    b.y_max = 80;
    f.boxes.push_back(b);
  }
  const auto dets = simulate_detections(f, m, 1920, 1080);
  EXPECT_GE(dets.size(), f.boxes.size());
  for (const auto& d : dets) {
    EXPECT_TRUE(d.is_valid());
    EXPECT_GE(d.confidence, 0.05);
    EXPECT_LE(d.confidence, 1.0);
  }
}

TEST(Experiment, ZeroNoiseFusedRecallIsOne) {
  const ExperimentReport r = run_experiment(RigSpec::default_rig(), zero_noise_config(40));
  EXPECT_DOUBLE_EQ(recall(r.fused.pooled), 1.0);
  EXPECT_DOUBLE_EQ(recall(r.wide_only.pooled), 1.0);
  EXPECT_LT(recall(r.narrow_only.pooled), 1.0);
  EXPECT_EQ(r.fused.frames.size(), 40u);
  EXPECT_EQ(r.common_ground_truth.size(), 40u);
}

TEST(Experiment, DeterministicForSeed) {
  ExperimentConfig c;
  c.trials = 30;
  const RigSpec rig = RigSpec::default_rig();
  const ExperimentReport a = run_experiment(rig, c), b = run_experiment(rig, c);
  EXPECT_EQ(a.fused.pooled, b.fused.pooled);
  EXPECT_EQ(a.wide_only.mean_f1, b.wide_only.mean_f1);
  for (std::size_t t = 0; t < a.fused.frames.size(); ++t) EXPECT_EQ(a.fused.frames[t].boxes, b.fused.frames[t].boxes);
  c.seed = 43;
  EXPECT_NE(run_experiment(rig, c).fused.pooled, a.fused.pooled);
}

TEST(Experiment, FusionBeatsEitherCamera) {
  ExperimentConfig c;
  c.trials = 100;
  const ExperimentReport r = run_experiment(RigSpec::default_rig(), c);
  EXPECT_GE(r.fused.mean_recall, r.wide_only.mean_recall + 0.10);
  EXPECT_GE(r.fused.mean_recall, r.narrow_only.mean_recall);
  EXPECT_EQ(r.total_common_gt, r.fused.pooled.tp + r.fused.pooled.fn);
  for (double thr : c.pr_iou_thresholds) EXPECT_EQ(r.fused.curves.at(thr).final_counts.tp + r.fused.curves.at(thr).final_counts.fn, r.total_common_gt);
}

TEST(Experiment, NonFaithfulNeverLosesWideRecallWithoutDropout) {
  // With both detectors perfect, keeping in-R0 wide boxes that no narrow box
  // covers can only add matches over the wide-only system.
  ExperimentConfig c = zero_noise_config(40);
  c.fusion.faithful_mode = false;
  const ExperimentReport r = run_experiment(RigSpec::default_rig(), c);
  EXPECT_GE(r.fused.pooled.tp + 1e-9, r.wide_only.pooled.tp);
}

TEST(Experiment, InvalidConfig) {
  ExperimentConfig c;
  c.trials = 0;
  EXPECT_THROW(c.validate(), InvariantViolation);
  c = ExperimentConfig{};
  c.iou_threshold = 0;
  EXPECT_THROW(c.validate(), InvariantViolation);
}
