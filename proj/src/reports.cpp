#include "dualfuse/reports.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include <nlohmann/json.hpp>

#include "dualfuse/errors.hpp"

namespace dualfuse {

using nlohmann::json;

namespace {

std::string format(const char* fmt, auto... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string out(std::size_t(n) + 1, '\0');
  std::snprintf(out.data(), out.size(), fmt, args...);
  out.resize(std::size_t(n));
  return out;
}

std::string counts_row(const std::string& name, const Counts& c) {
  return format("%s\t%.4f\t%.4f\t%.4f\t%zu\t%zu\t%zu\n", name.c_str(), precision(c), recall(c), f1(c),
                c.tp, c.fp, c.fn);
}

}  // namespace

std::string metrics_table_tsv(const MatchReport& report) {
  std::string out = "class\tprecision\trecall\tf1\ttp\tfp\tfn\n";
  for (const auto& [name, c] : report.per_class) out += counts_row(name, c);
  out += counts_row("all", report);
  return out;
}

std::string pr_curve_tsv(const PRCurve& curve) {
  std::string out = "recall\tprecision\tconfidence\n";
  for (const auto& p : curve.points) out += format("%.6f\t%.6f\t%.6f\n", p.recall, p.precision, p.confidence);
  return out;
}

namespace {

const SystemResult* systems_of(const ExperimentReport& r, int i) {
  const SystemResult* all[3] = {&r.wide_only, &r.narrow_only, &r.fused};
  return all[i];
}

}  // namespace

std::string experiment_pr_tsv(const ExperimentReport& report) {
  std::string out = "system\tiou\trecall\tprecision\tconfidence\n";
  for (int i = 0; i < 3; ++i) {
    const SystemResult& s = *systems_of(report, i);
    for (const auto& [thr, curve] : s.curves)
      for (const auto& p : curve.points)
        out += format("%s\t%.2f\t%.6f\t%.6f\t%.6f\n", s.name.c_str(), thr, p.recall, p.precision, p.confidence);
  }
  return out;
}

std::string experiment_metrics_tsv(const ExperimentReport& report) {
  std::string out = "system\tprecision\trecall\tf1\ttp\tfp\tfn\n";
  for (int i = 0; i < 3; ++i) {
    const SystemResult& s = *systems_of(report, i);
    out += format("%s\t%.4f\t%.4f\t%.4f\t%zu\t%zu\t%zu\n", s.name.c_str(), s.mean_precision, s.mean_recall,
                  s.mean_f1, s.pooled.tp, s.pooled.fp, s.pooled.fn);
  }
  return out;
}

namespace {

json noise_json(const DetectorNoiseModel& n) {
  return {{"dropout_base", n.dropout_base},
          {"dropout_scale", n.dropout_scale},
          {"dropout_softness", n.dropout_softness},
          {"jitter_sigma", n.jitter_sigma},
          {"confidence_mean", n.confidence_mean},
          {"confidence_sigma", n.confidence_sigma},
          {"false_positives_per_frame", n.false_positives_per_frame},
          {"rng_seed", n.rng_seed}};
}

json config_json(const ExperimentConfig& c) {
  const SceneParams& s = c.scene;
  return {{"trials", c.trials},
          {"seed", c.seed},
          {"iou_threshold", c.iou_threshold},
          {"pr_iou_thresholds", c.pr_iou_thresholds},
          {"zeta", c.fusion.zeta},
          {"faithful", c.fusion.faithful_mode},
          {"scene",
           {{"count", s.count},
            {"depth_min", s.depth_min},
            {"depth_max", s.depth_max},
            {"lateral_min", s.lateral_min},
            {"lateral_max", s.lateral_max},
            {"vertical_min", s.vertical_min},
            {"vertical_max", s.vertical_max},
            {"width_min", s.width_min},
            {"width_max", s.width_max},
            {"height_min", s.height_min},
            {"height_max", s.height_max},
            {"class_weights", s.class_weights}}},
          {"narrow_noise", noise_json(c.narrow_noise)},
          {"wide_noise", noise_json(c.wide_noise)}};
}

json system_json(const SystemResult& s) {
  json curves = json::object();
  for (const auto& [thr, curve] : s.curves) {
    const OperatingPoint best = best_f1_point(curve);
    curves[format("%.2f", thr)] = {{"points", curve.points.size()},
                                   {"final_recall", recall(curve.final_counts)},
                                   {"final_precision", precision(curve.final_counts)},
                                   {"best_f1", best.f1},
                                   {"best_f1_confidence", best.confidence}};
  }
  return {{"mean_precision", s.mean_precision},
          {"mean_recall", s.mean_recall},
          {"mean_f1", s.mean_f1},
          {"pooled", {{"tp", s.pooled.tp}, {"fp", s.pooled.fp}, {"fn", s.pooled.fn}}},
          {"curves", curves}};
}

}  // namespace

std::string experiment_report_json(const ExperimentReport& r) {
  json doc = {{"config", config_json(r.config)},
              {"totals",
               {{"common_gt", r.total_common_gt},
                {"narrow_gt", r.total_narrow_gt},
                {"wide_gt", r.total_wide_gt},
                {"removed_wide", r.removed_wide},
                {"removed_narrow", r.removed_narrow},
                {"dropped", r.dropped}}},
              {"systems",
               {{r.wide_only.name, system_json(r.wide_only)},
                {r.narrow_only.name, system_json(r.narrow_only)},
                {r.fused.name, system_json(r.fused)}}}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Configuration parsing

namespace {

using FieldSetter = std::function<void(const json&, const std::string&)>;

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void apply_fields(const json& obj, const std::string& path, const std::map<std::string, FieldSetter>& fields) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = fields.find(key);
    const std::string key_path = join_path(path, key);
    if (it == fields.end()) throw SchemaError(key_path, "unknown key");
    it->second(value, key_path);
  }
}

FieldSetter number(double& target) {
  return [&target](const json& v, const std::string& p) {
    if (!v.is_number()) throw SchemaError(p, "expected a number");
    target = v.get<double>();
  };
}

template <typename Int>
FieldSetter count(Int& target) {
  return [&target](const json& v, const std::string& p) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw SchemaError(p, "expected a non-negative integer");
    target = v.get<Int>();
  };
}

FieldSetter boolean(bool& target) {
  return [&target](const json& v, const std::string& p) {
    if (!v.is_boolean()) throw SchemaError(p, "expected true or false");
    target = v.get<bool>();
  };
}

FieldSetter noise_fields(DetectorNoiseModel& n) {
  return [&n](const json& v, const std::string& p) {
    apply_fields(v, p,
                 {{"dropout_base", number(n.dropout_base)},
                  {"dropout_scale", number(n.dropout_scale)},
                  {"dropout_softness", number(n.dropout_softness)},
                  {"jitter_sigma", number(n.jitter_sigma)},
                  {"confidence_mean", number(n.confidence_mean)},
                  {"confidence_sigma", number(n.confidence_sigma)},
                  {"false_positives_per_frame", number(n.false_positives_per_frame)},
                  {"rng_seed", count(n.rng_seed)}});
  };
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const ExperimentConfig& base) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("malformed JSON: ") + e.what());
  }

  ExperimentConfig c = base;
  SceneParams& s = c.scene;
  const FieldSetter thresholds = [&c](const json& v, const std::string& p) {
    if (!v.is_array() || v.empty()) throw SchemaError(p, "expected a non-empty array of numbers");
    c.pr_iou_thresholds.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw SchemaError(p + "[" + std::to_string(i) + "]", "expected a number");
      c.pr_iou_thresholds.push_back(v[i].get<double>());
    }
  };
  const FieldSetter weights = [&s](const json& v, const std::string& p) {
    if (!v.is_array() || v.size() != s.class_weights.size())
      throw SchemaError(p, "expected an array of " + std::to_string(s.class_weights.size()) + " numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw SchemaError(p + "[" + std::to_string(i) + "]", "expected a number");
      s.class_weights[i] = v[i].get<double>();
    }
  };
  const FieldSetter scene = [&](const json& v, const std::string& p) {
    apply_fields(v, p,
                 {{"count", count(s.count)},
                  {"depth_min", number(s.depth_min)},
                  {"depth_max", number(s.depth_max)},
                  {"lateral_min", number(s.lateral_min)},
                  {"lateral_max", number(s.lateral_max)},
                  {"vertical_min", number(s.vertical_min)},
                  {"vertical_max", number(s.vertical_max)},
                  {"width_min", number(s.width_min)},
                  {"width_max", number(s.width_max)},
                  {"height_min", number(s.height_min)},
                  {"height_max", number(s.height_max)},
                  {"class_weights", weights}});
  };

  apply_fields(root, "",
               {{"trials", count(c.trials)},
                {"seed", count(c.seed)},
                {"iou_threshold", number(c.iou_threshold)},
                {"pr_iou_thresholds", thresholds},
                {"zeta", number(c.fusion.zeta)},
                {"faithful", boolean(c.fusion.faithful_mode)},
                {"scene", scene},
                {"narrow_noise", noise_fields(c.narrow_noise)},
                {"wide_noise", noise_fields(c.wide_noise)}});
  c.validate();
  return c;
}

RigSpec rig_from_bundle(const CalibrationBundle& bundle) {
  if (!bundle.pose) throw SchemaError("pose", "a rig needs the relative pose");
  if (!bundle.plane) throw SchemaError("plane", "a rig needs the homography plane");
  RigSpec rig;
  rig.narrow = bundle.narrow;
  rig.narrow_distortion = bundle.narrow_distortion;
  rig.wide = bundle.wide;
  rig.wide_distortion = bundle.wide_distortion;
  rig.pose = *bundle.pose;
  rig.plane = *bundle.plane;
  rig.validate();
  return rig;
}

ClassMergeMap parse_merge_map(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("<root>", "expected an object of class renames");
  std::map<std::string, std::string> mapping;
  for (const auto& [from, to] : root.items()) {
    if (!to.is_string() || to.get<std::string>().empty()) throw SchemaError(from, "expected a class name");
    mapping[ClassLabel::from_name(from).name()] = ClassLabel::from_name(to.get<std::string>()).name();
  }
  return ClassMergeMap(std::move(mapping));
}

}  // namespace dualfuse
