#include "dualfuse/fuse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dualfuse {

RegionR0::RegionR0(ConvexPolygon polygon) : polygon_(std::move(polygon)) {
  const auto& v = polygon_.vertices;
  if (v.size() < 3) throw InvalidRegion("region needs at least 3 vertices");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const PixelPoint& a = v[i];
    const PixelPoint& b = v[(i + 1) % v.size()];
    const PixelPoint& c = v[(i + 2) % v.size()];
    const double turn = (b.x() - a.x()) * (c.y() - b.y()) - (b.y() - a.y()) * (c.x() - b.x());
    if (!(turn > 1e-9 * (b - a).norm() * (c - b).norm()))
      throw InvalidRegion("region is not strictly convex with positive orientation");
  }
  if (!(polygon_area(polygon_) >= 1.0)) throw InvalidRegion("region area is below 1 px^2");
}

RegionR0 compute_region_r0(const TransformChain& chain, int points_per_edge) {
  const int n = std::max(2, points_per_edge);
  const double w = chain.narrow.width;
  const double h = chain.narrow.height;
  const PixelPoint corners[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};

  std::vector<PixelPoint> mapped;
  mapped.reserve(std::size_t(4 * (n - 1)));
  for (int e = 0; e < 4; ++e) {
    const PixelPoint& a = corners[e];
    const PixelPoint& b = corners[(e + 1) % 4];
    for (int i = 0; i < n - 1; ++i) {
      const double t = double(i) / double(n - 1);
      mapped.push_back(transform_point(PixelPoint((1 - t) * a + t * b), chain));
    }
  }
  ConvexPolygon hull = convex_hull(std::move(mapped));
  if (hull.empty()) throw InvalidRegion("mapped narrow frame has no area");
  return RegionR0(std::move(hull));
}

ClippedShape clip_box_to_region(const BBox& b, const RegionR0& r) {
  return clip_convex(ConvexPolygon::from_box(b), r.polygon());
}

double iou_shape_box(const ClippedShape& q, const BBox& b) {
  if (q.empty()) return 0;
  const double inter = polygon_area(clip_to_box(q, b));
  if (inter <= 0) return 0;
  const double uni = polygon_area(q) + b.area() - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

bool box_inside_region(const BBox& b, const RegionR0& r) {
  for (int i = 0; i < 4; ++i)
    if (!contains_point(r.polygon(), b.corner(i))) return false;
  return true;
}

void FusionConfig::validate() const {
  if (!(zeta >= 0 && zeta <= 1)) {
    std::ostringstream os;
    os << "zeta must lie in [0, 1], got " << zeta;
    throw InvariantViolation(os.str());
  }
}

FusionResult fuse_transformed(const TransformedSet& n0, std::span<const BBox> wide,
                              const RegionR0& r0, const FusionConfig& cfg) {
  cfg.validate();
  FusionResult out;
  out.dropped = n0.dropped;

  // Wide boxes that survive the inside-R0 rule, with their clip against R0.
  std::vector<std::size_t> kept_wide;
  std::vector<ClippedShape> shapes;
  kept_wide.reserve(wide.size());
  for (std::size_t i = 0; i < wide.size(); ++i) {
    const BBox& w = wide[i];
    if (box_inside_region(w, r0)) {
      bool keep = false;
      if (!cfg.faithful_mode) {
        keep = std::none_of(n0.boxes.begin(), n0.boxes.end(),
                            [&](const BBox& n) { return iou_boxes(w, n) >= cfg.zeta; });
      }
      if (!keep) {
        ++out.removed_wide;
        continue;
      }
    }
    kept_wide.push_back(i);
    ClippedShape q = clip_box_to_region(w, r0);
    if (!q.empty()) shapes.push_back(std::move(q));
  }

  for (std::size_t j = 0; j < n0.boxes.size(); ++j) {
    const BBox& n = n0.boxes[j];
    const bool duplicate = std::any_of(shapes.begin(), shapes.end(), [&](const ClippedShape& q) {
      return iou_shape_box(q, n) >= cfg.zeta;
    });
    if (duplicate) {
      ++out.removed_narrow;
      continue;
    }
    out.fused.push_back(n);
    out.provenance.push_back(Provenance::Narrow);
    out.source_index.push_back(j < n0.source_index.size() ? n0.source_index[j] : j);
  }
  for (std::size_t i : kept_wide) {
    out.fused.push_back(wide[i]);
    out.provenance.push_back(Provenance::Wide);
    out.source_index.push_back(i);
  }
  return out;
}

FusionResult fuse(std::span<const BBox> narrow, std::span<const BBox> wide,
                  const TransformChain& chain, const RegionR0& r0, const FusionConfig& cfg) {
  return fuse_transformed(transform_detection_set(narrow, chain, cfg.warp), wide, r0, cfg);
}

}  // namespace dualfuse
