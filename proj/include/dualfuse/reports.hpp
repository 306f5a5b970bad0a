#pragma once

// Text renderings of evaluation and experiment results, and the JSON
// experiment configuration. Numbers are printed with fixed precision so equal
// inputs always give byte-identical output.

#include <string>
#include <string_view>

#include "dualfuse/evalkit.hpp"
#include "dualfuse/synthrig.hpp"

namespace dualfuse {

/// Tab-separated `class precision recall f1 tp fp fn`, one row per class in
/// name order followed by an `all` row.
std::string metrics_table_tsv(const MatchReport& report);

/// Tab-separated `recall precision confidence`, one row per curve point.
std::string pr_curve_tsv(const PRCurve& curve);

/// Tab-separated `system iou recall precision confidence` over every curve
/// of the three systems.
std::string experiment_pr_tsv(const ExperimentReport& report);

/// Tab-separated `system precision recall f1 tp fp fn` with trial-mean
/// precision/recall/F1 and pooled counts.
std::string experiment_metrics_tsv(const ExperimentReport& report);

/// Configuration, totals and per-system summaries (curves are left to the
/// PR table).
std::string experiment_report_json(const ExperimentReport& report);

/// Overrides fields of `base` with the keys present in `json_text`:
///
///   {"trials", "seed", "iou_threshold", "pr_iou_thresholds", "zeta", "faithful",
///    "scene": {"count", "depth_min", ..., "class_weights": [10 numbers]},
///    "narrow_noise": {"dropout_base", "dropout_scale", "dropout_softness",
///                     "jitter_sigma", "confidence_mean", "confidence_sigma",
///                     "false_positives_per_frame", "rng_seed"},
///    "wide_noise": {same keys}}
///
/// Unknown keys and wrongly typed values throw SchemaError; out-of-range
/// values throw InvariantViolation.
ExperimentConfig parse_experiment_config(std::string_view json_text, const ExperimentConfig& base = {});

/// Rig from a calibration bundle that carries `pose` and `plane`; the
/// homography is re-derived from them. Throws SchemaError when either is absent.
RigSpec rig_from_bundle(const CalibrationBundle& bundle);

/// Class-rename table from a JSON object of `"from": "to"` strings.
ClassMergeMap parse_merge_map(std::string_view json_text);

}  // namespace dualfuse
