#include "dualfuse/boxwarp.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace dualfuse {

void TransformChain::validate() const {
  narrow.validate();
  wide.validate();
  narrow_distortion.validate();
  wide_distortion.validate();
}

TransformChain TransformChain::undistorted(const CameraIntrinsics& narrow,
                                           const CameraIntrinsics& wide, const Homography& h) {
  return TransformChain{narrow, DistortionCoeffs{}, wide, DistortionCoeffs{}, h};
}

PixelPoint transform_point(const PixelPoint& p, const TransformChain& chain,
                           const UndistortOptions<double>& undistort) {
  const NormalizedPoint narrow_ideal =
      undistort_point(pixel_to_normalized(p, chain.narrow), chain.narrow_distortion, undistort);
  const PixelPoint wide_ideal =
      apply_homography(chain.homography, normalized_to_pixel(narrow_ideal, chain.narrow));
  return normalized_to_pixel(
      distort_point(pixel_to_normalized(wide_ideal, chain.wide), chain.wide_distortion), chain.wide);
}

BBox transform_bbox(const BBox& box, const TransformChain& chain, const BoxWarpOptions& opts) {
  box.validate();
  const int n = std::max(1, opts.edge_subdivisions);

  double x_lo = std::numeric_limits<double>::infinity();
  double y_lo = x_lo;
  double x_hi = -x_lo;
  double y_hi = -x_lo;
  for (int edge = 0; edge < 4; ++edge) {
    const PixelPoint a = box.corner(edge);
    const PixelPoint b = box.corner(edge + 1);
    for (int i = 0; i < n; ++i) {
      const double t = double(i) / double(n);
      const PixelPoint q = transform_point(PixelPoint((1 - t) * a + t * b), chain, opts.undistort);
      x_lo = std::min(x_lo, q.x());
      y_lo = std::min(y_lo, q.y());
      x_hi = std::max(x_hi, q.x());
      y_hi = std::max(y_hi, q.y());
    }
  }

  if (!(x_hi - x_lo >= 1.0) || !(y_hi - y_lo >= 1.0)) {
    std::ostringstream os;
    os << "transformed box collapses to " << (x_hi - x_lo) << " x " << (y_hi - y_lo) << " px";
    throw DegenerateBox(os.str());
  }
  BBox out = box;
  out.x_min = x_lo;
  out.y_min = y_lo;
  out.x_max = x_hi;
  out.y_max = y_hi;
  return out;
}

TransformedSet transform_detection_set(std::span<const BBox> boxes, const TransformChain& chain,
                                       const BoxWarpOptions& opts) {
  TransformedSet out;
  out.boxes.reserve(boxes.size());
  out.source_index.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    try {
      out.boxes.push_back(transform_bbox(boxes[i], chain, opts));
      out.source_index.push_back(i);
    } catch (const NumericError&) {
      ++out.dropped;
    }
  }
  return out;
}

}  // namespace dualfuse
