#pragma once

// Independent reference computations for the tests and the acceptance suite.
// Nothing here calls into the library's geometry; each routine re-derives its
// answer from first principles by a different route.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "dualfuse/bbox.hpp"

namespace oracle {

using Pt = Eigen::Vector2d;

/// Brown-Conrady polynomial, written out term by term.
inline Pt brown_conrady(double x, double y, double k1, double k2, double k3, double p1, double p2) {
  const double r2 = x * x + y * y;
  const double radial = 1.0 + k1 * r2 + k2 * r2 * r2 + k3 * r2 * r2 * r2;
  return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
          y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle_rad) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-max_angle_rad, max_angle_rad);
  Eigen::Vector3d axis(g(rng), g(rng), g(rng));
  axis.normalize();
  return Eigen::AngleAxisd(u(rng), axis).toRotationMatrix();
}

/// Projective map applied by explicit division.
inline Pt apply(const Eigen::Matrix3d& h, const Pt& p) {
  const double x = h(0, 0) * p.x() + h(0, 1) * p.y() + h(0, 2);
  const double y = h(1, 0) * p.x() + h(1, 1) * p.y() + h(1, 2);
  const double w = h(2, 0) * p.x() + h(2, 1) * p.y() + h(2, 2);
  return {x / w, y / w};
}

/// Shoelace area (absolute).
inline double area(const std::vector<Pt>& poly) {
  double s = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& a = poly[i];
    const Pt& b = poly[(i + 1) % poly.size()];
    s += a.x() * b.y() - a.y() * b.x();
  }
  return std::abs(s) / 2;
}

/// Clips a polygon to one axis-aligned half-plane: keep coord[axis] >= bound
/// when `keep_above`, else coord[axis] <= bound.
inline std::vector<Pt> clip_axis(const std::vector<Pt>& poly, int axis, double bound, bool keep_above) {
  std::vector<Pt> out;
  auto inside = [&](const Pt& p) { return keep_above ? p[axis] >= bound : p[axis] <= bound; };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& a = poly[i];
    const Pt& b = poly[(i + 1) % poly.size()];
    const bool ia = inside(a), ib = inside(b);
    if (ia) out.push_back(a);
    if (ia != ib) {
      const double t = (bound - a[axis]) / (b[axis] - a[axis]);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

/// Area of polygon ∩ axis-aligned rectangle; 0 for an empty rectangle.
inline double area_in_rect(const std::vector<Pt>& poly, double x0, double y0, double x1, double y1) {
  if (!(x1 > x0) || !(y1 > y0)) return 0.0;
  std::vector<Pt> p = clip_axis(poly, 0, x0, true);
  p = clip_axis(p, 0, x1, false);
  p = clip_axis(p, 1, y0, true);
  p = clip_axis(p, 1, y1, false);
  return p.size() < 3 ? 0.0 : area(p);
}

/// Closed point-in-polygon by crossing number, with points within `tol` of
/// an edge counted as inside.
inline bool inside_closed(const std::vector<Pt>& poly, const Pt& p, double tol = 1e-7) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& a = poly[i];
    const Pt& b = poly[(i + 1) % poly.size()];
    const Pt ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    if ((a + t * ab - p).norm() <= tol) return true;
  }
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Pt& a = poly[i];
    const Pt& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) in = !in;
    }
  }
  return in;
}

inline double box_iou(const dualfuse::BBox& a, const dualfuse::BBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (w > 0 && h > 0) ? w * h : 0.0;
  const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

struct FuseReference {
  std::vector<dualfuse::BBox> fused;
  std::size_t removed_wide{0};
  std::size_t removed_narrow{0};
};

/// Literal evaluation of the duplicate-suppression set definitions:
///   W_r = { w in W : w not completely inside R0 }   (faithful)
///   Q   = { w ∩ R0 : w in W_r, non-empty }
///   N_r = { n in N0 : IoU(q, n) < zeta for every q in Q }
///   out = N_r followed by W_r, each in input order.
/// In non-faithful mode an inside box stays in W_r when no n in N0 overlaps
/// it with box IoU >= zeta.
inline FuseReference fuse_reference(const std::vector<dualfuse::BBox>& n0, const std::vector<dualfuse::BBox>& wide,
                                    const std::vector<Pt>& r0, double zeta, bool faithful) {
  FuseReference out;
  std::vector<const dualfuse::BBox*> wr;
  for (const auto& w : wide) {
    const bool inside = inside_closed(r0, {w.x_min, w.y_min}) && inside_closed(r0, {w.x_max, w.y_min}) &&
                        inside_closed(r0, {w.x_max, w.y_max}) && inside_closed(r0, {w.x_min, w.y_max});
    bool keep = !inside;
    if (inside && !faithful) {
      keep = true;
      for (const auto& n : n0)
        if (box_iou(w, n) >= zeta) keep = false;
    }
    if (keep)
      wr.push_back(&w);
    else
      ++out.removed_wide;
  }
  for (const auto& n : n0) {
    bool suppressed = false;
    for (const auto* w : wr) {
      const double aq = area_in_rect(r0, w->x_min, w->y_min, w->x_max, w->y_max);
      if (aq <= 1e-12) continue;
      const double inter = area_in_rect(r0, std::max(w->x_min, n.x_min), std::max(w->y_min, n.y_min),
                                        std::min(w->x_max, n.x_max), std::min(w->y_max, n.y_max));
      const double iou = inter / (aq + (n.x_max - n.x_min) * (n.y_max - n.y_min) - inter);
      if (iou >= zeta) suppressed = true;
    }
    if (suppressed)
      ++out.removed_narrow;
    else
      out.fused.push_back(n);
  }
  for (const auto* w : wr) out.fused.push_back(*w);
  return out;
}

}  // namespace oracle
