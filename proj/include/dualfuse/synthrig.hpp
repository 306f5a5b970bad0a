#pragma once

// Synthetic dual-camera rig: random traffic-light scenes, exact ground-truth
// projection into both cameras, a box-level detector noise model, and the
// wide-only / narrow-only / fused comparison experiment.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dualfuse/bbox.hpp"
#include "dualfuse/boxwarp.hpp"
#include "dualfuse/camgeom.hpp"
#include "dualfuse/evalkit.hpp"
#include "dualfuse/fuse.hpp"
#include "dualfuse/homography.hpp"
#include "dualfuse/ioformats.hpp"

namespace dualfuse {

struct RigSpec {
  CameraIntrinsics narrow;
  DistortionCoeffs narrow_distortion;
  CameraIntrinsics wide;
  DistortionCoeffs wide_distortion;
  RelativePose pose;  ///< narrow camera coordinates -> wide camera coordinates
  PlaneSpec plane;    ///< plane inducing the homography, narrow coordinates

  /// 1920x1080 cameras with 48 and 125 degree horizontal FoV, aligned axes,
  /// the wide camera 42 mm below the narrow one, homography plane 35 m ahead.
  static RigSpec default_rig();

  void validate() const;
  Homography homography() const;  ///< plane-induced, from the extrinsics
  TransformChain chain() const;
  CalibrationBundle bundle() const;
};

struct SceneObject {
  Eigen::Vector3d center;  ///< meters, narrow-camera coordinates (x right, y down, z forward)
  double width{0.35};
  double height{1.0};
  ClassLabel label{};
};

struct SceneParams {
  std::size_t count{8};
  double depth_min{20}, depth_max{120};
  double lateral_min{-15}, lateral_max{15};    ///< x, meters
  double vertical_min{-7}, vertical_max{-2};   ///< y, meters (negative is up)
  double width_min{0.3}, width_max{0.45};
  double height_min{0.8}, height_max{1.1};
  /// Relative class frequencies in TrafficLightClass order; defaults to the
  /// dataset's total instance counts per class.
  std::array<double, kTrafficLightClassCount> class_weights{2449, 1466, 921, 762, 742,
                                                            698,  691,  286, 160, 146};

  void validate() const;
};

std::vector<SceneObject> generate_scene(const SceneParams& params, std::uint64_t seed);

struct ProjectedGroundTruth {
  Frame narrow;  ///< narrow-frame pixels
  Frame wide;    ///< wide-frame pixels
  Frame common;  ///< wide-frame pixels: every object seen by either camera
  std::vector<int> narrow_object;  ///< scene index of each narrow box
  std::vector<int> wide_object;    ///< scene index of each wide box
  std::vector<int> common_object;  ///< scene index of each common box
};

/// Projects each object's rectangle (with distortion) into both cameras and
/// clips to the frame; boxes under 1 px in either direction are omitted.
/// Objects missing from the wide frame enter the common ground truth through
/// their transformed narrow box.
ProjectedGroundTruth project_ground_truth(const std::vector<SceneObject>& scene, const RigSpec& rig,
                                          const std::string& frame_id = "frame");

/// Box of one object in a camera placed by `pose` relative to the narrow
/// camera (identity for the narrow camera itself), or nullopt when not visible.
std::optional<BBox> project_object(const SceneObject& object, const RelativePose& pose, const CameraIntrinsics& k,
                                   const DistortionCoeffs& d);

struct DetectorNoiseModel {
  double dropout_base{0.02};
  double dropout_scale{12.0};    ///< pixels; boxes shorter than this are mostly missed
  double dropout_softness{2.0};  ///< pixels; 0 gives a hard size cutoff
  double jitter_sigma{0.5};      ///< pixels, per box edge
  double confidence_mean{0.75};
  double confidence_sigma{0.15};
  double false_positives_per_frame{0.2};
  std::uint64_t rng_seed{0};

  /// No dropout, no jitter, confidence 1, no false positives.
  static DetectorNoiseModel perfect();

  /// dropout_base + (1 - dropout_base) * sigmoid((dropout_scale - h) / dropout_softness)
  double dropout_probability(double box_height_px) const;

  void validate() const;
};

/// Simulated detector output for one frame of `width` x `height` pixels.
std::vector<BBox> simulate_detections(const Frame& gt, const DetectorNoiseModel& noise, int width,
                                      int height);

struct ExperimentConfig {
  SceneParams scene{};
  DetectorNoiseModel narrow_noise{};
  DetectorNoiseModel wide_noise{};
  FusionConfig fusion{};
  double iou_threshold{0.3};
  std::vector<double> pr_iou_thresholds{0.3, 0.5};
  std::size_t trials{200};
  std::uint64_t seed{42};

  void validate() const;
};

struct SystemResult {
  std::string name;
  double mean_precision{0};
  double mean_recall{0};
  double mean_f1{0};
  Counts pooled{};
  std::map<double, PRCurve> curves;  ///< keyed by IoU threshold
  std::vector<Frame> frames;         ///< per-trial output, wide-frame pixels
};

struct ExperimentReport {
  ExperimentConfig config;
  SystemResult wide_only;
  SystemResult narrow_only;
  SystemResult fused;
  std::size_t total_common_gt{0};
  std::size_t total_narrow_gt{0};
  std::size_t total_wide_gt{0};
  std::size_t removed_wide{0};
  std::size_t removed_narrow{0};
  std::size_t dropped{0};
  std::vector<Frame> common_ground_truth;  ///< per trial, aligned with each system's frames
};

/// Per-trial seeds derived from config.seed; output is a pure function of
/// (rig, config).
ExperimentReport run_experiment(const RigSpec& rig, const ExperimentConfig& config);

/// Deterministic 64-bit mix used to derive independent stream seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace dualfuse
