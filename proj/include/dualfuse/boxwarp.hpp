#pragma once

#include <span>
#include <vector>

#include "dualfuse/bbox.hpp"
#include "dualfuse/camgeom.hpp"
#include "dualfuse/homography.hpp"

namespace dualfuse {

/// Everything needed to carry a point from the distorted narrow frame to the
/// distorted wide frame: undistort (narrow), homography, redistort (wide).
struct TransformChain {
  CameraIntrinsics narrow;
  DistortionCoeffs narrow_distortion;
  CameraIntrinsics wide;
  DistortionCoeffs wide_distortion;
  Homography homography;  ///< narrow-undistorted -> wide-undistorted pixels

  void validate() const;

  /// Chain with zero distortion on both sides.
  static TransformChain undistorted(const CameraIntrinsics& narrow, const CameraIntrinsics& wide,
                                    const Homography& h);
};

struct BoxWarpOptions {
  /// Each box edge is split into this many segments; the 4 * n segment
  /// endpoints are transformed and their axis-aligned hull is the result.
  /// 2 gives the four corners plus the four edge midpoints.
  int edge_subdivisions{2};
  UndistortOptions<double> undistort{};
};

PixelPoint transform_point(const PixelPoint& p, const TransformChain& chain,
                           const UndistortOptions<double>& undistort = {});

/// Transforms the box's perimeter samples and returns their axis-aligned
/// hull, carrying label and confidence over unchanged. Throws DegenerateBox
/// when the hull is thinner than 1 px in either direction.
BBox transform_bbox(const BBox& box, const TransformChain& chain, const BoxWarpOptions& opts = {});

struct TransformedSet {
  std::vector<BBox> boxes;
  std::vector<std::size_t> source_index;  ///< input position of each output box
  std::size_t dropped{0};
};

/// Element-wise transform_bbox in input order. Boxes whose transform fails
/// for numeric reasons are skipped and counted in `dropped`.
TransformedSet transform_detection_set(std::span<const BBox> boxes, const TransformChain& chain,
                                       const BoxWarpOptions& opts = {});

}  // namespace dualfuse
