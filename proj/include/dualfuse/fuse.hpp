#pragma once

#include <span>
#include <vector>

#include "dualfuse/bbox.hpp"
#include "dualfuse/boxwarp.hpp"
#include "dualfuse/polygon.hpp"

namespace dualfuse {

/// Footprint of the narrow frame inside the distorted wide frame.
///
/// Always a strictly convex polygon with at least three vertices, positive
/// signed area, and area >= 1 px^2.
class RegionR0 {
 public:
  explicit RegionR0(ConvexPolygon polygon);

  const ConvexPolygon& polygon() const { return polygon_; }
  const std::vector<PixelPoint>& vertices() const { return polygon_.vertices; }
  double area() const { return polygon_area(polygon_); }

 private:
  ConvexPolygon polygon_;
};

/// Maps `points_per_edge` samples along each side of the narrow frame
/// through the chain and takes the convex hull.
RegionR0 compute_region_r0(const TransformChain& chain, int points_per_edge = 16);

ClippedShape clip_box_to_region(const BBox& b, const RegionR0& r);

/// IoU between a clipped shape and a box; 0 when the shape is empty.
double iou_shape_box(const ClippedShape& q, const BBox& b);

/// All four corners inside or on the region boundary (1e-9 px slack).
bool box_inside_region(const BBox& b, const RegionR0& r);

struct FusionConfig {
  double zeta{0.5};
  /// true: every wide box fully inside R0 is removed. false: such a box is
  /// kept unless some transformed narrow box overlaps it with IoU >= zeta.
  bool faithful_mode{true};
  BoxWarpOptions warp{};

  void validate() const;
};

enum class Provenance { Narrow, Wide };

struct FusionResult {
  std::vector<BBox> fused;  ///< narrow survivors in input order, then wide survivors
  std::vector<Provenance> provenance;
  std::vector<std::size_t> source_index;  ///< index into the originating input list
  std::size_t removed_wide{0};    ///< wide boxes dropped for lying inside R0
  std::size_t removed_narrow{0};  ///< transformed narrow boxes suppressed as duplicates
  std::size_t dropped{0};         ///< narrow boxes whose transform failed
};

/// Duplicate suppression once the narrow detections are already in the wide
/// frame. `narrow_transformed` carries the narrow-list indices of its boxes.
FusionResult fuse_transformed(const TransformedSet& narrow_transformed, std::span<const BBox> wide,
                              const RegionR0& r0, const FusionConfig& cfg);

/// Full per-frame-pair fusion: transform the narrow detections into the wide
/// frame, drop wide boxes inside R0, suppress transformed narrow boxes that
/// overlap the in-R0 part of a surviving wide box, and concatenate.
FusionResult fuse(std::span<const BBox> narrow, std::span<const BBox> wide,
                  const TransformChain& chain, const RegionR0& r0, const FusionConfig& cfg = {});

}  // namespace dualfuse
