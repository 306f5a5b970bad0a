#pragma once

// Random frame pairs for the fusion property tests. Some narrow boxes touch the
// frame edge. Wide boxes are a mix of
// jittered duplicates of narrow detections, boxes straddling the R0 border,
// boxes fully inside R0 and unrelated boxes anywhere in the frame.

#include <algorithm>
#include <random>
#include <vector>

#include "dualfuse/boxwarp.hpp"
#include "dualfuse/fuse.hpp"

namespace instances {

struct FramePair {
  std::vector<dualfuse::BBox> narrow;
  std::vector<dualfuse::BBox> wide;
};

inline dualfuse::BBox make_box(double x0, double y0, double x1, double y1, std::mt19937_64& rng) {
  dualfuse::BBox b;
  b.x_min = x0;
  b.y_min = y0;
  b.x_max = x1;
  b.y_max = y1;
  b.label = static_cast<dualfuse::TrafficLightClass>(std::uniform_int_distribution<int>(0, 9)(rng));
  b.confidence = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
  return b;
}

inline FramePair random_pair(std::mt19937_64& rng, const dualfuse::TransformChain& chain,
                             const dualfuse::RegionR0& r0, int max_boxes) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(0, max_boxes);
  FramePair pair;
  const double nw = chain.narrow.width, nh = chain.narrow.height;
  const double ww = chain.wide.width, wh = chain.wide.height;

  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double w = 8 + 200 * unit(rng), h = 8 + 300 * unit(rng);
    double x = unit(rng) * (nw - w), y = unit(rng) * (nh - h);
    if (unit(rng) < 0.4) {
      // Against one edge of the narrow frame, so the transformed box lies on
      // the R0 border where wide duplicates straddle it.
      const double gap = 3 * unit(rng);
      switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: x = gap; break;
        case 1: x = nw - w - gap; break;
        case 2: y = gap; break;
        default: y = nh - h - gap; break;
      }
    }
    pair.narrow.push_back(make_box(x, y, x + w, y + h, rng));
  }
  const auto n0 = dualfuse::transform_detection_set(pair.narrow, chain);

  const auto& verts = r0.vertices();
  double rx0 = verts[0].x(), rx1 = rx0, ry0 = verts[0].y(), ry1 = ry0;
  for (const auto& v : verts) {
    rx0 = std::min(rx0, v.x());
    rx1 = std::max(rx1, v.x());
    ry0 = std::min(ry0, v.y());
    ry1 = std::max(ry1, v.y());
  }

  const int m = count(rng);
  for (int i = 0; i < m; ++i) {
    const double kind = unit(rng);
    if (kind < 0.35 && !n0.boxes.empty()) {
      // Duplicate of a narrow detection, shifted by up to a sixth of its size
      // and grown by up to 60%, often across the R0 border.
      const auto& src = n0.boxes[std::uniform_int_distribution<std::size_t>(0, n0.boxes.size() - 1)(rng)];
      const double jx = (unit(rng) - 0.5) * src.width() / 3, jy = (unit(rng) - 0.5) * src.height() / 3;
      const double sx = 0.9 + 0.7 * unit(rng), sy = 0.9 + 0.7 * unit(rng);
      const double cx = (src.x_min + src.x_max) / 2 + jx, cy = (src.y_min + src.y_max) / 2 + jy;
      const double w = std::max(1.5, src.width() * sx), h = std::max(1.5, src.height() * sy);
      pair.wide.push_back(make_box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2, rng));
    } else if (kind < 0.6) {
      // Centred near a random point of the R0 border.
      const std::size_t e = std::uniform_int_distribution<std::size_t>(0, verts.size() - 1)(rng);
      const auto& a = verts[e];
      const auto& b = verts[(e + 1) % verts.size()];
      const double t = unit(rng);
      const double w = 2 + 40 * unit(rng), h = 2 + 60 * unit(rng);
      const double cx = a.x() + t * (b.x() - a.x()) + (unit(rng) - 0.5) * w;
      const double cy = a.y() + t * (b.y() - a.y()) + (unit(rng) - 0.5) * h;
      pair.wide.push_back(make_box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2, rng));
    } else if (kind < 0.8) {
      // Inside the R0 bounding box (often fully inside R0).
      const double w = 2 + 40 * unit(rng), h = 2 + 60 * unit(rng);
      const double x = rx0 + unit(rng) * std::max(0.0, rx1 - rx0 - w), y = ry0 + unit(rng) * std::max(0.0, ry1 - ry0 - h);
      pair.wide.push_back(make_box(x, y, x + w, y + h, rng));
    } else {
      const double w = 2 + 80 * unit(rng), h = 2 + 120 * unit(rng);
      const double x = unit(rng) * (ww - w), y = unit(rng) * (wh - h);
      pair.wide.push_back(make_box(x, y, x + w, y + h, rng));
    }
  }
  return pair;
}

}  // namespace instances
