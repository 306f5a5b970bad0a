#include "dualfuse/evalkit.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "dualfuse/errors.hpp"

namespace dualfuse {

double precision(const Counts& c) {
  const std::size_t d = c.tp + c.fp;
  return d == 0 ? 0.0 : double(c.tp) / double(d);
}

double recall(const Counts& c) {
  const std::size_t d = c.tp + c.fn;
  return d == 0 ? 0.0 : double(c.tp) / double(d);
}

// Harmonic mean of precision and recall, in the count form 2tp / (2tp + fp + fn)
// so that the result is correctly rounded.
double f1(const Counts& c) {
  const std::size_t d = 2 * c.tp + c.fp + c.fn;
  return c.tp == 0 ? 0.0 : double(2 * c.tp) / double(d);
}

namespace {

// Best unmatched same-class ground truth for `pred`, or -1.
int best_match(const BBox& pred, std::span<const BBox> gts, const std::vector<bool>& taken,
               const std::string& pred_class, const std::vector<std::string>& gt_class,
               double threshold) {
  int best = -1;
  double best_iou = -1;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (taken[g] || gt_class[g] != pred_class) continue;
    const double iou = iou_boxes(pred, gts[g]);
    if (iou >= threshold && iou > best_iou) {
      best_iou = iou;
      best = int(g);
    }
  }
  return best;
}

std::vector<std::string> class_names(std::span<const BBox> boxes) {
  std::vector<std::string> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(b.label.name());
  return out;
}

}  // namespace

MatchReport match_frame(std::span<const BBox> preds, std::span<const BBox> gts,
                        double iou_threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });

  const auto pred_class = class_names(preds);
  const auto gt_class = class_names(gts);
  std::vector<bool> taken(gts.size(), false);

  MatchReport report;
  report.matched_gt.assign(preds.size(), -1);
  for (std::size_t i : order) {
    const int g = best_match(preds[i], gts, taken, pred_class[i], gt_class, iou_threshold);
    if (g >= 0) {
      taken[std::size_t(g)] = true;
      report.matched_gt[i] = g;
      ++report.tp;
      ++report.per_class[pred_class[i]].tp;
    } else {
      ++report.fp;
      ++report.per_class[pred_class[i]].fp;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) {
      ++report.fn;
      ++report.per_class[gt_class[g]].fn;
    }
  }
  return report;
}

namespace {

std::unordered_map<std::string, std::size_t> index_frames(std::span<const Frame> gts) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!index.emplace(gts[i].frame_id, i).second)
      throw InputError("duplicate ground-truth frame id '" + gts[i].frame_id + "'");
  }
  return index;
}

}  // namespace

MatchReport evaluate_frames(std::span<const Frame> preds, std::span<const Frame> gts,
                            double iou_threshold, double conf_cutoff) {
  const auto index = index_frames(gts);
  std::vector<std::vector<BBox>> per_frame(gts.size());
  for (const auto& f : preds) {
    const auto it = index.find(f.frame_id);
    if (it == index.end()) throw MissingFrame("prediction frame '" + f.frame_id + "' has no ground truth");
    for (const auto& b : f.boxes)
      if (b.confidence >= conf_cutoff) per_frame[it->second].push_back(b);
  }

  MatchReport total;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const MatchReport m = match_frame(per_frame[i], gts[i].boxes, iou_threshold);
    total += m;
    for (const auto& [name, c] : m.per_class) total.per_class[name] += c;
  }
  return total;
}

PRCurve pr_curve(std::span<const Frame> preds, std::span<const Frame> gts, double iou_threshold,
                 std::optional<ClassLabel> class_filter) {
  const auto index = index_frames(gts);
  const std::optional<std::string> wanted =
      class_filter ? std::optional<std::string>(class_filter->name()) : std::nullopt;
  auto selected = [&](const BBox& b) { return !wanted || b.label.name() == *wanted; };

  PRCurve curve;
  curve.class_filter = class_filter;

  std::vector<std::vector<BBox>> gt_boxes(gts.size());
  std::vector<std::vector<std::string>> gt_class(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    for (const auto& b : gts[i].boxes)
      if (selected(b)) gt_boxes[i].push_back(b);
    gt_class[i] = class_names(gt_boxes[i]);
    curve.total_gt += gt_boxes[i].size();
  }

  struct Ranked {
    const BBox* box;
    std::size_t frame;
  };
  std::vector<Ranked> pool;
  for (const auto& f : preds) {
    const auto it = index.find(f.frame_id);
    if (it == index.end()) throw MissingFrame("prediction frame '" + f.frame_id + "' has no ground truth");
    for (const auto& b : f.boxes)
      if (selected(b)) pool.push_back({&b, it->second});
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Ranked& a, const Ranked& b) {
    return a.box->confidence > b.box->confidence;
  });

  std::vector<std::vector<bool>> taken(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) taken[i].assign(gt_boxes[i].size(), false);

  Counts c;
  curve.points.reserve(pool.size());
  for (const auto& r : pool) {
    const int g = best_match(*r.box, gt_boxes[r.frame], taken[r.frame], r.box->label.name(),
                             gt_class[r.frame], iou_threshold);
    if (g >= 0) {
      taken[r.frame][std::size_t(g)] = true;
      ++c.tp;
    } else {
      ++c.fp;
    }
    const double rec = curve.total_gt == 0 ? 0.0 : double(c.tp) / double(curve.total_gt);
    curve.points.push_back({rec, double(c.tp) / double(c.tp + c.fp), r.box->confidence});
  }
  c.fn = curve.total_gt - c.tp;
  curve.final_counts = c;
  return curve;
}

OperatingPoint best_f1_point(const PRCurve& curve) {
  OperatingPoint best;
  bool first = true;
  for (const auto& p : curve.points) {
    const double f = (p.precision + p.recall) == 0 ? 0.0
                                                   : 2 * p.precision * p.recall / (p.precision + p.recall);
    if (first || f > best.f1) {
      best = {p.recall, p.precision, f, p.confidence};
      first = false;
    }
  }
  return best;
}

ClassMergeMap ClassMergeMap::green_arrows() {
  return ClassMergeMap({{"Green-left", "Green-arrows"},
                        {"Green-right", "Green-arrows"},
                        {"Green-up", "Green-arrows"}});
}

ClassLabel ClassMergeMap::apply(const ClassLabel& label) const {
  const auto it = mapping_.find(label.name());
  return it == mapping_.end() ? label : ClassLabel::from_name(it->second);
}

std::vector<Frame> ClassMergeMap::apply(std::span<const Frame> frames) const {
  std::vector<Frame> out(frames.begin(), frames.end());
  for (auto& f : out)
    for (auto& b : f.boxes) b.label = apply(b.label);
  return out;
}

}  // namespace dualfuse
