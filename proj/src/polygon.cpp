#include "dualfuse/polygon.hpp"

#include <algorithm>
#include <cmath>

namespace dualfuse {

namespace {

double cross(const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

constexpr double kAreaEps = 1e-12;

// Keeps the part of `poly` on the non-negative side of f, where f is affine.
template <typename Side>
std::vector<PixelPoint> clip_half_plane(const std::vector<PixelPoint>& poly, Side side) {
  std::vector<PixelPoint> out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 2);
  PixelPoint prev = poly.back();
  double f_prev = side(prev);
  for (const PixelPoint& cur : poly) {
    const double f_cur = side(cur);
    if (f_cur >= 0) {
      if (f_prev < 0) out.emplace_back(prev + (cur - prev) * (f_prev / (f_prev - f_cur)));
      out.push_back(cur);
    } else if (f_prev >= 0) {
      out.emplace_back(prev + (cur - prev) * (f_prev / (f_prev - f_cur)));
    }
    prev = cur;
    f_prev = f_cur;
  }
  return out;
}

ConvexPolygon finish(std::vector<PixelPoint> verts) {
  if (verts.size() < 3 || signed_area(verts) <= kAreaEps) return {};
  return ConvexPolygon{std::move(verts)};
}

}  // namespace

ConvexPolygon ConvexPolygon::from_box(const BBox& b) {
  return ConvexPolygon{{b.corner(0), b.corner(1), b.corner(2), b.corner(3)}};
}

double signed_area(std::span<const PixelPoint> v) {
  if (v.size() < 3) return 0;
  double sum = 0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
    sum += v[j].x() * v[i].y() - v[i].x() * v[j].y();
  return sum / 2;
}

double polygon_area(const ConvexPolygon& p) { return std::abs(signed_area(p.vertices)); }

ConvexPolygon convex_hull(std::vector<PixelPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const PixelPoint& a, const PixelPoint& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return {};

  // Monotone chain with the exact orientation sign. A tolerance here could
  // pop a true extreme point when near-collinear samples sort out of order.
  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && !(cross(hull[k - 2], hull[k - 1], p) > 0)) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && !(cross(hull[k - 2], hull[k - 1], pts[i]) > 0)) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  // Then drop vertices that are collinear with their neighbours up to rounding.
  auto nearly_straight = [](const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
    return cross(o, a, b) <= 1e-9 * (a - o).norm() * (b - a).norm();
  };
  for (bool changed = true; changed && hull.size() >= 3;) {
    changed = false;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const std::size_t prev = (i + hull.size() - 1) % hull.size(), next = (i + 1) % hull.size();
      if (nearly_straight(hull[prev], hull[i], hull[next])) {
        hull.erase(hull.begin() + std::ptrdiff_t(i));
        changed = true;
        break;
      }
    }
  }
  return finish(std::move(hull));
}

ConvexPolygon clip_convex(const ConvexPolygon& subject, const ConvexPolygon& clip) {
  if (subject.empty() || clip.empty()) return {};
  std::vector<PixelPoint> poly = subject.vertices;
  const auto& c = clip.vertices;
  for (std::size_t i = 0; i < c.size() && !poly.empty(); ++i) {
    const PixelPoint& a = c[i];
    const PixelPoint& b = c[(i + 1) % c.size()];
    poly = clip_half_plane(poly, [&](const PixelPoint& p) { return cross(a, b, p); });
  }
  return finish(std::move(poly));
}

ConvexPolygon clip_to_box(const ConvexPolygon& subject, const BBox& box) {
  if (subject.empty()) return {};
  std::vector<PixelPoint> poly = subject.vertices;
  poly = clip_half_plane(poly, [&](const PixelPoint& p) { return p.x() - box.x_min; });
  poly = clip_half_plane(poly, [&](const PixelPoint& p) { return box.x_max - p.x(); });
  poly = clip_half_plane(poly, [&](const PixelPoint& p) { return p.y() - box.y_min; });
  poly = clip_half_plane(poly, [&](const PixelPoint& p) { return box.y_max - p.y(); });
  return finish(std::move(poly));
}

bool contains_point(const ConvexPolygon& polygon, const PixelPoint& p, double slack) {
  if (polygon.empty()) return false;
  const auto& v = polygon.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const PixelPoint& a = v[i];
    const PixelPoint& b = v[(i + 1) % v.size()];
    const double len = (b - a).norm();
    if (cross(a, b, p) < -slack * len) return false;
  }
  return true;
}

}  // namespace dualfuse
