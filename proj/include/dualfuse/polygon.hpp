#pragma once

#include <span>
#include <vector>

#include "dualfuse/bbox.hpp"
#include "dualfuse/camgeom.hpp"

namespace dualfuse {

/// Convex polygon with vertices in positive signed-area order. May be empty.
struct ConvexPolygon {
  std::vector<PixelPoint> vertices;

  bool empty() const { return vertices.size() < 3; }
  static ConvexPolygon from_box(const BBox& b);
};

/// Result of intersecting a box with a convex region.
using ClippedShape = ConvexPolygon;

/// Shoelace sum; positive for the vertex order used throughout.
double signed_area(std::span<const PixelPoint> vertices);

double polygon_area(const ConvexPolygon& p);

inline double box_area(const BBox& b) { return b.area(); }

/// Convex hull (Andrew's monotone chain) in positive signed-area order,
/// starting at the lowest-x (then lowest-y) point. Vertices that are
/// collinear within a relative 1e-9 are dropped.
ConvexPolygon convex_hull(std::vector<PixelPoint> points);

/// Sutherland-Hodgman clip of `subject` against every edge of the convex
/// `clip` polygon. Returns an empty polygon when the overlap has no area.
ConvexPolygon clip_convex(const ConvexPolygon& subject, const ConvexPolygon& clip);

/// Intersection of a convex polygon with an axis-aligned box.
ConvexPolygon clip_to_box(const ConvexPolygon& subject, const BBox& box);

/// True when `p` is inside or within `slack` pixels of the polygon boundary.
bool contains_point(const ConvexPolygon& polygon, const PixelPoint& p, double slack = 1e-9);

}  // namespace dualfuse
