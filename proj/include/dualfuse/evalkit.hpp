#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualfuse/bbox.hpp"

namespace dualfuse {

/// Boxes of one image, keyed by an identifier unique within a dataset.
/// Used for both predictions and ground truth (whose confidence is ignored).
struct Frame {
  std::string frame_id;
  std::vector<BBox> boxes;
};
using GroundTruthFrame = Frame;

struct Counts {
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t fn{0};

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

// 0/0 is defined as 0 for all three.
double precision(const Counts& c);
double recall(const Counts& c);
double f1(const Counts& c);

struct MatchReport : Counts {
  std::map<std::string, Counts> per_class;  ///< keyed by class name
  /// For each input prediction, the index of the ground truth it matched, or -1.
  std::vector<int> matched_gt;
};

/// Greedy confidence-ordered matching (PASCAL VOC style): predictions are
/// visited by descending confidence (ties by input order); each claims the
/// still-unmatched ground truth of the same class with the highest IoU at or
/// above `iou_threshold` (ties by lower index).
MatchReport match_frame(std::span<const BBox> preds, std::span<const BBox> gts,
                        double iou_threshold);

/// Sums match_frame over frames aligned by frame_id, keeping only predictions
/// with confidence >= conf_cutoff. Ground-truth frames without predictions
/// count fully as misses; throws MissingFrame for predictions on unknown frames.
MatchReport evaluate_frames(std::span<const Frame> preds, std::span<const Frame> gts,
                            double iou_threshold, double conf_cutoff = 0.0);

struct PRPoint {
  double recall{0};
  double precision{0};
  double confidence{0};  ///< score of the prediction that produced this point
};

struct PRCurve {
  std::optional<ClassLabel> class_filter;  ///< nullopt: all classes pooled
  std::vector<PRPoint> points;
  std::size_t total_gt{0};
  Counts final_counts{};
};

/// Pools predictions over all frames, ranks them by confidence and emits one
/// (recall, precision) point per prediction.
PRCurve pr_curve(std::span<const Frame> preds, std::span<const Frame> gts, double iou_threshold,
                 std::optional<ClassLabel> class_filter = std::nullopt);

struct OperatingPoint {
  double recall{0};
  double precision{0};
  double f1{0};
  double confidence{0};
};

/// Point of the curve with the largest F1 (first one on ties).
OperatingPoint best_f1_point(const PRCurve& curve);

/// Renames classes, e.g. folding the three green-arrow classes into one.
class ClassMergeMap {
 public:
  ClassMergeMap() = default;
  explicit ClassMergeMap(std::map<std::string, std::string> mapping) : mapping_(std::move(mapping)) {}

  /// Green-left, Green-right and Green-up -> "Green-arrows".
  static ClassMergeMap green_arrows();

  ClassLabel apply(const ClassLabel& label) const;
  std::vector<Frame> apply(std::span<const Frame> frames) const;
  const std::map<std::string, std::string>& mapping() const { return mapping_; }

 private:
  std::map<std::string, std::string> mapping_;
};

}  // namespace dualfuse
