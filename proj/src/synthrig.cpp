#include "dualfuse/synthrig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dualfuse/polygon.hpp"

namespace dualfuse {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over a stream-offset state
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Rig

RigSpec RigSpec::default_rig() {
  RigSpec rig;
  rig.narrow = CameraIntrinsics::from_hfov(48.0, 1920, 1080);
  rig.wide = CameraIntrinsics::from_hfov(125.0, 1920, 1080);
  rig.narrow_distortion = DistortionCoeffs{-0.10, 0.02, 0.0, 0.0005, -0.0003};
  rig.wide_distortion = DistortionCoeffs{-0.12, 0.02, 0.0, 0.001, -0.0005};
  // Wide camera sits 42 mm below the narrow one (+y is down): X_w = X_n - c.
  rig.pose.rotation.setIdentity();
  rig.pose.translation = Eigen::Vector3d(0.0, 0.042, 0.0);
  rig.plane.normal = Eigen::Vector3d::UnitZ();
  rig.plane.distance = 35.0;
  return rig;
}

void RigSpec::validate() const {
  narrow.validate();
  wide.validate();
  narrow_distortion.validate();
  wide_distortion.validate();
  pose.validate();
  plane.validate();
}

Homography RigSpec::homography() const {
  return homography_from_extrinsics(wide, narrow, pose, plane);
}

TransformChain RigSpec::chain() const {
  return TransformChain{narrow, narrow_distortion, wide, wide_distortion, homography()};
}

CalibrationBundle RigSpec::bundle() const {
  CalibrationBundle b;
  b.narrow = narrow;
  b.narrow_distortion = narrow_distortion;
  b.wide = wide;
  b.wide_distortion = wide_distortion;
  b.homography = homography();
  b.pose = pose;
  b.plane = plane;
  return b;
}

// ---------------------------------------------------------------------------
// Scenes

void SceneParams::validate() const {
  auto range_ok = [](double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; };
  if (!range_ok(depth_min, depth_max) || depth_min <= 1.0)
    throw InvariantViolation("scene depth range must satisfy 1 < min <= max");
  if (!range_ok(lateral_min, lateral_max) || !range_ok(vertical_min, vertical_max))
    throw InvariantViolation("scene lateral/vertical ranges must satisfy min <= max");
  if (!range_ok(width_min, width_max) || !range_ok(height_min, height_max) || width_min <= 0.1 ||
      height_min <= 0.1 || width_max >= 2.0 || height_max >= 2.0)
    throw InvariantViolation("object sizes must lie in (0.1 m, 2 m)");
  double total = 0;
  for (double w : class_weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw InvariantViolation("class weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0)) throw InvariantViolation("class weights must not all be zero");
}

std::vector<SceneObject> generate_scene(const SceneParams& params, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::discrete_distribution<int> pick_class(params.class_weights.begin(), params.class_weights.end());

  std::vector<SceneObject> scene;
  scene.reserve(params.count);
  for (std::size_t i = 0; i < params.count; ++i) {
    SceneObject o;
    o.center.z() = uniform(params.depth_min, params.depth_max);
    o.center.x() = uniform(params.lateral_min, params.lateral_max);
    o.center.y() = uniform(params.vertical_min, params.vertical_max);
    o.width = uniform(params.width_min, params.width_max);
    o.height = uniform(params.height_min, params.height_max);
    o.label = static_cast<TrafficLightClass>(pick_class(rng));
    scene.push_back(o);
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Ground-truth projection

namespace {

// A camera plus the undistorted normalized rectangle over which its lens
// model is trusted (the frame's preimage with a small margin).
struct CameraView {
  CameraIntrinsics k;
  DistortionCoeffs d;
  BBox valid_region;
};

CameraView make_view(const CameraIntrinsics& k, const DistortionCoeffs& d) {
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  const double w = k.width;
  const double h = k.height;
  const PixelPoint corners[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
  constexpr int kSamples = 16;
  for (int e = 0; e < 4; ++e) {
    for (int i = 0; i < kSamples; ++i) {
      const double t = double(i) / kSamples;
      const PixelPoint p((1 - t) * corners[e] + t * corners[(e + 1) % 4]);
      const NormalizedPoint q = undistort_point(pixel_to_normalized(p, k), d);
      x_lo = std::min(x_lo, q.x());
      x_hi = std::max(x_hi, q.x());
      y_lo = std::min(y_lo, q.y());
      y_hi = std::max(y_hi, q.y());
    }
  }
  const double mx = 0.02 * (x_hi - x_lo);
  const double my = 0.02 * (y_hi - y_lo);
  BBox region;
  region.x_min = x_lo - mx;
  region.x_max = x_hi + mx;
  region.y_min = y_lo - my;
  region.y_max = y_hi + my;
  return {k, d, region};
}

std::optional<BBox> project_into(const SceneObject& o, const RelativePose& pose, const CameraView& view) {
  std::vector<PixelPoint> quad;  // normalized coordinates, reusing the 2D point type
  for (int i = 0; i < 4; ++i) {
    const double sx = (i == 1 || i == 2) ? 0.5 : -0.5;
    const double sy = (i >= 2) ? 0.5 : -0.5;
    const Vector3<double> corner = o.center + Vector3<double>(sx * o.width, sy * o.height, 0.0);
    const Vector3<double> cam = pose.apply(corner);
    if (cam.z() <= 0.1) return std::nullopt;
    quad.emplace_back(cam.x() / cam.z(), cam.y() / cam.z());
  }
  const ConvexPolygon visible = clip_to_box(convex_hull(std::move(quad)), view.valid_region);
  if (visible.empty()) return std::nullopt;

  double x_lo = std::numeric_limits<double>::infinity(), y_lo = x_lo;
  double x_hi = -x_lo, y_hi = -x_lo;
  constexpr int kPerEdge = 4;
  const auto& v = visible.vertices;
  for (std::size_t e = 0; e < v.size(); ++e) {
    for (int i = 0; i < kPerEdge; ++i) {
      const double t = double(i) / kPerEdge;
      const NormalizedPoint q((1 - t) * v[e] + t * v[(e + 1) % v.size()]);
      const PixelPoint p = normalized_to_pixel(distort_point(q, view.d), view.k);
      x_lo = std::min(x_lo, p.x());
      x_hi = std::max(x_hi, p.x());
      y_lo = std::min(y_lo, p.y());
      y_hi = std::max(y_hi, p.y());
    }
  }
  BBox b;
  b.x_min = std::max(x_lo, 0.0);
  b.y_min = std::max(y_lo, 0.0);
  b.x_max = std::min(x_hi, double(view.k.width));
  b.y_max = std::min(y_hi, double(view.k.height));
  b.label = o.label;
  b.confidence = 1.0;
  if (!(b.width() >= 1.0) || !(b.height() >= 1.0)) return std::nullopt;
  return b;
}

}  // namespace

std::optional<BBox> project_object(const SceneObject& object, const RelativePose& pose, const CameraIntrinsics& k,
                                   const DistortionCoeffs& d) {
  return project_into(object, pose, make_view(k, d));
}

ProjectedGroundTruth project_ground_truth(const std::vector<SceneObject>& scene, const RigSpec& rig,
                                          const std::string& frame_id) {
  rig.validate();
  const CameraView narrow = make_view(rig.narrow, rig.narrow_distortion);
  const CameraView wide = make_view(rig.wide, rig.wide_distortion);
  const TransformChain chain = rig.chain();

  ProjectedGroundTruth gt;
  gt.narrow.frame_id = gt.wide.frame_id = gt.common.frame_id = frame_id;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto n = project_into(scene[i], RelativePose{}, narrow);
    const auto w = project_into(scene[i], rig.pose, wide);
    if (n) {
      gt.narrow.boxes.push_back(*n);
      gt.narrow_object.push_back(int(i));
    }
    if (w) {
      gt.wide.boxes.push_back(*w);
      gt.wide_object.push_back(int(i));
      gt.common.boxes.push_back(*w);
      gt.common_object.push_back(int(i));
    } else if (n) {
      try {
        gt.common.boxes.push_back(transform_bbox(*n, chain));
        gt.common_object.push_back(int(i));
      } catch (const NumericError&) {
        // Too small to survive the transfer; the object has no wide-frame footprint.
      }
    }
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Detector noise

DetectorNoiseModel DetectorNoiseModel::perfect() {
  DetectorNoiseModel m;
  m.dropout_base = 0;
  m.dropout_scale = 0;
  m.dropout_softness = 0;
  m.jitter_sigma = 0;
  m.confidence_mean = 1;
  m.confidence_sigma = 0;
  m.false_positives_per_frame = 0;
  return m;
}

double DetectorNoiseModel::dropout_probability(double h) const {
  double size_term = 0;
  if (dropout_softness > 0)
    size_term = 1.0 / (1.0 + std::exp(-(dropout_scale - h) / dropout_softness));
  else
    size_term = h < dropout_scale ? 1.0 : 0.0;
  return dropout_base + (1 - dropout_base) * size_term;
}

void DetectorNoiseModel::validate() const {
  if (!(dropout_base >= 0 && dropout_base <= 1)) throw InvariantViolation("dropout_base must lie in [0, 1]");
  if (!(jitter_sigma >= 0)) throw InvariantViolation("jitter_sigma must be >= 0");
  if (!(dropout_softness >= 0) || !std::isfinite(dropout_scale))
    throw InvariantViolation("dropout_softness must be >= 0 and dropout_scale finite");
  if (!(confidence_mean >= 0 && confidence_mean <= 1) || !(confidence_sigma >= 0))
    throw InvariantViolation("confidence_mean must lie in [0, 1] and confidence_sigma >= 0");
  if (!(false_positives_per_frame >= 0)) throw InvariantViolation("false_positives_per_frame must be >= 0");
}

std::vector<BBox> simulate_detections(const Frame& gt, const DetectorNoiseModel& noise, int width,
                                      int height) {
  noise.validate();
  std::mt19937_64 rng(noise.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto confidence = [&](double mean) {
    return std::clamp(mean + noise.confidence_sigma * gauss(rng), 0.05, 1.0);
  };

  std::vector<BBox> out;
  out.reserve(gt.boxes.size());
  for (const BBox& g : gt.boxes) {
    const double u = unit(rng);
    if (u < noise.dropout_probability(g.height())) continue;
    BBox b = g;
    if (noise.jitter_sigma > 0) {
      b.x_min += noise.jitter_sigma * gauss(rng);
      b.y_min += noise.jitter_sigma * gauss(rng);
      b.x_max += noise.jitter_sigma * gauss(rng);
      b.y_max += noise.jitter_sigma * gauss(rng);
      if (b.x_max < b.x_min) std::swap(b.x_min, b.x_max);
      if (b.y_max < b.y_min) std::swap(b.y_min, b.y_max);
      b.x_max = std::max(b.x_max, b.x_min + 0.5);
      b.y_max = std::max(b.y_max, b.y_min + 0.5);
    }
    b.confidence = noise.confidence_sigma > 0 ? confidence(noise.confidence_mean)
                                              : std::clamp(noise.confidence_mean, 0.0, 1.0);
    out.push_back(b);
  }

  if (noise.false_positives_per_frame > 0) {
    std::poisson_distribution<int> count(noise.false_positives_per_frame);
    std::uniform_int_distribution<int> cls(0, int(kTrafficLightClassCount) - 1);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      BBox b;
      const double h = 3.0 + 27.0 * unit(rng);
      const double w = h * (0.3 + 0.2 * unit(rng));
      b.x_min = unit(rng) * (width - w);
      b.y_min = unit(rng) * (height - h);
      b.x_max = b.x_min + w;
      b.y_max = b.y_min + h;
      b.label = static_cast<TrafficLightClass>(cls(rng));
      b.confidence = confidence(std::max(0.05, noise.confidence_mean - 0.3));
      out.push_back(b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment

void ExperimentConfig::validate() const {
  scene.validate();
  narrow_noise.validate();
  wide_noise.validate();
  fusion.validate();
  if (!(iou_threshold > 0 && iou_threshold <= 1)) throw InvariantViolation("iou_threshold must lie in (0, 1]");
  for (double t : pr_iou_thresholds)
    if (!(t > 0 && t <= 1)) throw InvariantViolation("pr_iou_thresholds must lie in (0, 1]");
  if (trials == 0) throw InvariantViolation("trials must be positive");
}

ExperimentReport run_experiment(const RigSpec& rig, const ExperimentConfig& config) {
  rig.validate();
  config.validate();
  const TransformChain chain = rig.chain();
  const RegionR0 r0 = compute_region_r0(chain);

  ExperimentReport report;
  report.config = config;
  report.wide_only.name = "wide-only";
  report.narrow_only.name = "narrow-only";
  report.fused.name = "fused";
  SystemResult* systems[3] = {&report.wide_only, &report.narrow_only, &report.fused};

  std::vector<Frame>& common_frames = report.common_ground_truth;
  common_frames.reserve(config.trials);

  for (std::size_t t = 0; t < config.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, t);
    std::ostringstream id;
    id << "trial_" << t;

    const auto scene = generate_scene(config.scene, derive_seed(trial_seed, 1));
    const ProjectedGroundTruth gt = project_ground_truth(scene, rig, id.str());

    DetectorNoiseModel narrow_noise = config.narrow_noise;
    narrow_noise.rng_seed = derive_seed(derive_seed(trial_seed, 2), config.narrow_noise.rng_seed);
    DetectorNoiseModel wide_noise = config.wide_noise;
    wide_noise.rng_seed = derive_seed(derive_seed(trial_seed, 3), config.wide_noise.rng_seed);

    const auto narrow_dets = simulate_detections(gt.narrow, narrow_noise, rig.narrow.width, rig.narrow.height);
    const auto wide_dets = simulate_detections(gt.wide, wide_noise, rig.wide.width, rig.wide.height);

    const TransformedSet n0 = transform_detection_set(narrow_dets, chain, config.fusion.warp);
    const FusionResult fused = fuse_transformed(n0, wide_dets, r0, config.fusion);
    report.removed_wide += fused.removed_wide;
    report.removed_narrow += fused.removed_narrow;
    report.dropped += fused.dropped;

    const std::vector<BBox>* outputs[3] = {&wide_dets, &n0.boxes, &fused.fused};
    for (int s = 0; s < 3; ++s) {
      const MatchReport m = match_frame(*outputs[s], gt.common.boxes, config.iou_threshold);
      systems[s]->mean_precision += precision(m);
      systems[s]->mean_recall += recall(m);
      systems[s]->mean_f1 += f1(m);
      systems[s]->pooled += m;
      systems[s]->frames.push_back(Frame{id.str(), *outputs[s]});
    }
    report.total_common_gt += gt.common.boxes.size();
    report.total_narrow_gt += gt.narrow.boxes.size();
    report.total_wide_gt += gt.wide.boxes.size();
    common_frames.push_back(gt.common);
  }

  const double n = double(config.trials);
  for (int s = 0; s < 3; ++s) {
    systems[s]->mean_precision /= n;
    systems[s]->mean_recall /= n;
    systems[s]->mean_f1 /= n;
    for (double thr : config.pr_iou_thresholds)
      systems[s]->curves[thr] = pr_curve(systems[s]->frames, common_frames, thr);
  }
  return report;
}

}  // namespace dualfuse
