#include "dualfuse/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <ostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/logger.h>
#include <spdlog/sinks/ostream_sink.h>

#include "dualfuse/errors.hpp"
#include "dualfuse/evalkit.hpp"
#include "dualfuse/fuse.hpp"
#include "dualfuse/ioformats.hpp"
#include "dualfuse/reports.hpp"
#include "dualfuse/synthrig.hpp"

namespace dualfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format(const char* fmt, auto... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string s(std::size_t(n) + 1, '\0');
  std::snprintf(s.data(), s.size(), fmt, args...);
  s.resize(std::size_t(n));
  return s;
}

void require_file(const fs::path& p, const char* flag) {
  if (p.empty()) return;
  if (!fs::is_regular_file(p)) throw IoError(std::string(flag) + ": no such file '" + p.string() + "'");
}

void require_dir(const fs::path& p, const char* flag) {
  if (p.empty()) return;
  if (!fs::is_directory(p)) throw IoError(std::string(flag) + ": no such directory '" + p.string() + "'");
}

void check_range(double v, double lo, double hi, bool lo_open, const char* flag) {
  const bool ok = std::isfinite(v) && (lo_open ? v > lo : v >= lo) && v <= hi;
  if (!ok)
    throw InvariantViolation(format("%s must lie in %c%g, %g]", flag, lo_open ? '(' : '[', lo, hi));
}

}  // namespace

void CliConfig::validate() const {
  check_range(zeta, 0.0, 1.0, true, "--zeta");
  check_range(iou_threshold, 0.0, 1.0, true, "--iou");
  check_range(conf_cutoff, 0.0, 1.0, false, "--conf-cutoff");
  if (jobs < 1 || jobs > 256) throw InvariantViolation("--jobs must lie in [1, 256]");
  if (image_width <= 0 || image_height <= 0) throw InvariantViolation("--width and --height must be positive");
  if (trials && *trials == 0) throw InvariantViolation("--trials must be positive");
  require_file(correspondences, "--correspondences");
  require_file(bundle, "--bundle");
  require_file(merge_map, "--merge-map");
  require_file(classes, "--classes");
  require_file(rig, "--rig");
  require_file(config, "--config");
  require_dir(narrow_dir, "--narrow");
  require_dir(wide_dir, "--wide");
  require_dir(pred_dir, "--pred");
  require_dir(gt_dir, "--gt");
}

namespace {

struct Context {
  const CliConfig& cfg;
  std::ostream& out;
  spdlog::logger& log;
};

spdlog::level::level_enum parse_verbosity(const std::string& v) {
  if (v == "error") return spdlog::level::err;
  if (v == "warn") return spdlog::level::warn;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  throw InputError("DUALFUSE_LOG must be one of error, warn, info, debug (got '" + v + "')");
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

std::vector<std::string> load_class_names(const CliConfig& cfg) {
  if (cfg.classes.empty()) return default_class_names();
  std::vector<std::string> names;
  const std::string text = read_text_file(cfg.classes);
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) names.push_back(line);
    start = end + 1;
  }
  if (names.empty()) throw ParseError(cfg.classes.string(), "class list is empty");
  return names;
}

// .xml files are VOC (sized by their own header); anything else is YOLO text
// normalized by the given frame size.
std::vector<BBox> load_boxes(const fs::path& path, int width, int height,
                             const std::vector<std::string>& classes) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".xml") {
    try {
      return parse_voc_annotation(text).boxes;
    } catch (const ParseError& e) {
      const std::string what = e.what();
      throw ParseError(path.string() + ":" + e.location(), what.substr(e.location().size() + 2));
    }
  }
  return parse_yolo_annotation(text, width, height, classes, path.string());
}

// Runs task(i) for i in [0, n) on `jobs` threads. Each task writes only its
// own slot, so results do not depend on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(std::size_t(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
    });
  for (auto& t : pool) t.join();
}

struct ItemOutcome {
  bool ok{false};
  std::string error;
  std::size_t removed_wide{0};
  std::size_t removed_narrow{0};
  std::size_t dropped{0};
};

// Per-item failures are recorded rather than propagated: one bad frame never
// aborts a batch.
template <typename Fn>
void isolate(ItemOutcome& outcome, Fn&& fn) {
  try {
    fn();
    outcome.ok = true;
  } catch (const InputError& e) {
    outcome.error = e.what();
  } catch (const NumericError& e) {
    outcome.error = e.what();
  } catch (const std::exception& e) {
    outcome.error = std::string("unexpected failure: ") + e.what();
  }
}

// ---------------------------------------------------------------------------

int cmd_estimate_homography(const Context& ctx) {
  const CliConfig& cfg = ctx.cfg;
  const auto pairs = parse_correspondences(read_text_file(cfg.correspondences), cfg.correspondences.string());
  const HomographyEstimate est = estimate_homography(pairs);

  CalibrationBundle bundle =
      cfg.bundle.empty() ? RigSpec::default_rig().bundle() : parse_calibration(read_text_file(cfg.bundle));
  bundle.homography = est.homography;
  write_text_file_atomic(cfg.out, serialize_calibration(bundle));

  ctx.out << format("homography estimated from %zu correspondences, rms residual %.3e px\n", pairs.size(),
                    est.residual);
  ctx.log.info("wrote {}", cfg.out.string());
  return kExitOk;
}

int cmd_transform(const Context& ctx) {
  const CliConfig& cfg = ctx.cfg;
  const CalibrationBundle bundle = parse_calibration(read_text_file(cfg.bundle));
  const TransformChain chain = bundle.chain();
  const auto files = annotation_files_by_stem(cfg.narrow_dir);
  ensure_out_dir(cfg.out);

  std::vector<std::pair<std::string, fs::path>> items;
  for (const auto& [stem, paths] : files) {
    if (paths.size() > 1) ctx.log.warn("'{}': {} files share the stem, using {}", stem, paths.size(), paths.front().string());
    items.emplace_back(stem, paths.front());
  }

  std::vector<ItemOutcome> outcomes(items.size());
  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    isolate(outcomes[i], [&] {
      const auto boxes = load_boxes(items[i].second, bundle.narrow.width, bundle.narrow.height, bundle.classes);
      const TransformedSet t = transform_detection_set(boxes, chain);
      write_text_file_atomic(cfg.out / (items[i].first + ".txt"),
                             serialize_yolo_annotation(t.boxes, bundle.wide.width, bundle.wide.height, bundle.classes));
      outcomes[i].dropped = t.dropped;
    });
  });

  std::size_t ok = 0, failed = 0, dropped = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (outcomes[i].ok) {
      ++ok;
      dropped += outcomes[i].dropped;
    } else {
      ++failed;
      ctx.log.error("{}: {}", items[i].first, outcomes[i].error);
    }
  }
  ctx.out << format("transformed %zu files, %zu boxes dropped, %zu files failed\n", ok, dropped, failed);
  return kExitOk;
}

int cmd_fuse(const Context& ctx) {
  const CliConfig& cfg = ctx.cfg;
  const CalibrationBundle bundle = parse_calibration(read_text_file(cfg.bundle));
  const TransformChain chain = bundle.chain();
  const RegionR0 r0 = compute_region_r0(chain);
  FusionConfig fusion;
  fusion.zeta = cfg.zeta;
  fusion.faithful_mode = cfg.faithful_mode;

  const FramePairIndex index = build_frame_pair_index(cfg.narrow_dir, cfg.wide_dir);
  for (const auto& d : index.diagnostics) ctx.log.warn("{}", d);
  ensure_out_dir(cfg.out);

  std::vector<ItemOutcome> outcomes(index.pairs.size());
  parallel_for(index.pairs.size(), cfg.jobs, [&](std::size_t i) {
    const FramePair& pair = index.pairs[i];
    isolate(outcomes[i], [&] {
      const auto narrow = load_boxes(pair.narrow_file, bundle.narrow.width, bundle.narrow.height, bundle.classes);
      const auto wide = load_boxes(pair.wide_file, bundle.wide.width, bundle.wide.height, bundle.classes);
      const FusionResult r = fuse(narrow, wide, chain, r0, fusion);
      write_text_file_atomic(cfg.out / (pair.frame_id + ".txt"),
                             serialize_yolo_annotation(r.fused, bundle.wide.width, bundle.wide.height, bundle.classes));
      outcomes[i].removed_wide = r.removed_wide;
      outcomes[i].removed_narrow = r.removed_narrow;
      outcomes[i].dropped = r.dropped;
    });
  });

  json failures = json::array();
  std::size_t processed = 0, removed_wide = 0, removed_narrow = 0, dropped = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const ItemOutcome& o = outcomes[i];
    if (!o.ok) {
      ctx.log.error("{}: {}", index.pairs[i].frame_id, o.error);
      failures.push_back({{"frame_id", index.pairs[i].frame_id}, {"error", o.error}});
      continue;
    }
    ++processed;
    removed_wide += o.removed_wide;
    removed_narrow += o.removed_narrow;
    dropped += o.dropped;
  }
  const json summary = {{"pairs_total", index.pairs.size()},
                        {"pairs_processed", processed},
                        {"pairs_failed", failures.size()},
                        {"removed_wide_inside_r0", removed_wide},
                        {"removed_narrow_duplicates", removed_narrow},
                        {"dropped_degenerate", dropped},
                        {"zeta", cfg.zeta},
                        {"faithful_mode", cfg.faithful_mode},
                        {"failures", failures},
                        {"unpaired", index.diagnostics}};
  write_text_file_atomic(cfg.out / "summary.json", summary.dump(2) + "\n");
  ctx.out << format("fused %zu of %zu pairs: %zu wide removed inside R0, %zu narrow duplicates removed, "
                    "%zu boxes dropped, %zu pairs failed\n",
                    processed, index.pairs.size(), removed_wide, removed_narrow, dropped, failures.size());
  return kExitOk;
}

std::vector<Frame> load_frames(const fs::path& dir, const CliConfig& cfg, const std::vector<std::string>& classes,
                               spdlog::logger& log) {
  std::vector<Frame> frames;
  for (const auto& [stem, paths] : annotation_files_by_stem(dir)) {
    if (paths.size() > 1) log.warn("'{}': {} files share the stem, using {}", stem, paths.size(), paths.front().string());
    frames.push_back({stem, load_boxes(paths.front(), cfg.image_width, cfg.image_height, classes)});
  }
  return frames;
}

int cmd_eval(const Context& ctx) {
  const CliConfig& cfg = ctx.cfg;
  const auto classes = load_class_names(cfg);
  std::vector<Frame> preds = load_frames(cfg.pred_dir, cfg, classes, ctx.log);
  std::vector<Frame> gts = load_frames(cfg.gt_dir, cfg, classes, ctx.log);
  if (!cfg.merge_map.empty()) {
    const ClassMergeMap merge = parse_merge_map(read_text_file(cfg.merge_map));
    preds = merge.apply(preds);
    gts = merge.apply(gts);
  }

  const MatchReport report = evaluate_frames(preds, gts, cfg.iou_threshold, cfg.conf_cutoff);
  std::string table = metrics_table_tsv(report);
  const PRCurve curve = pr_curve(preds, gts, cfg.iou_threshold);
  if (cfg.best_f1) {
    const OperatingPoint best = best_f1_point(curve);
    table += format("# best-f1\tf1\t%.4f\tconfidence\t%.6f\tprecision\t%.4f\trecall\t%.4f\n", best.f1, best.confidence,
                    best.precision, best.recall);
  }
  ctx.out << table;

  fs::path pr_path = cfg.pr_out;
  if (!cfg.report.empty()) {
    write_text_file_atomic(cfg.report, table);
    if (pr_path.empty()) pr_path = fs::path(cfg.report).replace_extension(".pr.tsv");
  }
  if (!pr_path.empty()) write_text_file_atomic(pr_path, pr_curve_tsv(curve));
  return kExitOk;
}

int cmd_simulate(const Context& ctx) {
  const CliConfig& cfg = ctx.cfg;
  const RigSpec rig =
      cfg.rig.empty() ? RigSpec::default_rig() : rig_from_bundle(parse_calibration(read_text_file(cfg.rig)));
  ExperimentConfig config =
      cfg.config.empty() ? ExperimentConfig{} : parse_experiment_config(read_text_file(cfg.config));
  if (cfg.seed) config.seed = *cfg.seed;
  if (cfg.trials) config.trials = *cfg.trials;
  if (cfg.zeta_given) config.fusion.zeta = cfg.zeta;
  if (cfg.iou_given) config.iou_threshold = cfg.iou_threshold;
  if (cfg.faithful_given) config.fusion.faithful_mode = cfg.faithful_mode;
  config.validate();

  const ExperimentReport report = run_experiment(rig, config);
  ensure_out_dir(cfg.out);
  write_text_file_atomic(cfg.out / "report.json", experiment_report_json(report));
  write_text_file_atomic(cfg.out / "metrics.tsv", experiment_metrics_tsv(report));
  write_text_file_atomic(cfg.out / "pr.tsv", experiment_pr_tsv(report));

  if (cfg.export_annotations) {
    const auto classes = default_class_names();
    auto export_frames = [&](const std::string& name, const std::vector<Frame>& frames) {
      const fs::path dir = cfg.out / "annotations" / name;
      ensure_out_dir(dir);
      for (const Frame& f : frames)
        write_text_file_atomic(dir / (f.frame_id + ".txt"),
                               serialize_yolo_annotation(f.boxes, rig.wide.width, rig.wide.height, classes));
    };
    export_frames("gt", report.common_ground_truth);
    for (const SystemResult* s : {&report.wide_only, &report.narrow_only, &report.fused})
      export_frames(s->name, s->frames);
  }

  for (const SystemResult* s : {&report.wide_only, &report.narrow_only, &report.fused})
    ctx.out << format("%-12s precision %.3f  recall %.3f  f1 %.3f\n", s->name.c_str(), s->mean_precision,
                      s->mean_recall, s->mean_f1);
  return kExitOk;
}

// ---------------------------------------------------------------------------

void add_fusion_flags(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--zeta", cfg.zeta, "IoU threshold for duplicate suppression");
  sub->add_flag("--faithful,!--no-faithful", cfg.faithful_mode,
                "remove every wide box inside R0 (default) or only confirmed duplicates");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Dual-camera traffic-light detection fusion toolkit", "dualfuse"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto* est = app.add_subcommand("estimate-homography", "estimate the narrow->wide homography from point pairs");
  est->add_option("--correspondences", cfg.correspondences, "text file of `src_x src_y dst_x dst_y` lines")->required();
  est->add_option("--out", cfg.out, "calibration bundle to write")->required();
  est->add_option("--bundle", cfg.bundle, "existing bundle whose homography is replaced");

  auto* tr = app.add_subcommand("transform", "map narrow-frame detections into the wide frame");
  tr->add_option("--bundle", cfg.bundle, "calibration bundle")->required();
  tr->add_option("--narrow", cfg.narrow_dir, "directory of narrow-frame annotations")->required();
  tr->add_option("--out", cfg.out, "output directory")->required();
  tr->add_option("--jobs", cfg.jobs, "worker threads");

  auto* fu = app.add_subcommand("fuse", "fuse narrow and wide detections frame pair by frame pair");
  fu->add_option("--bundle", cfg.bundle, "calibration bundle")->required();
  fu->add_option("--narrow", cfg.narrow_dir, "directory of narrow-frame annotations")->required();
  fu->add_option("--wide", cfg.wide_dir, "directory of wide-frame annotations")->required();
  fu->add_option("--out", cfg.out, "output directory")->required();
  fu->add_option("--jobs", cfg.jobs, "worker threads");
  add_fusion_flags(fu, cfg);

  auto* ev = app.add_subcommand("eval", "precision/recall/F1 of predictions against ground truth");
  ev->add_option("--pred", cfg.pred_dir, "directory of prediction annotations")->required();
  ev->add_option("--gt", cfg.gt_dir, "directory of ground-truth annotations")->required();
  ev->add_option("--iou", cfg.iou_threshold, "IoU threshold for a match");
  ev->add_option("--merge-map", cfg.merge_map, "JSON object renaming classes before evaluation");
  ev->add_option("--classes", cfg.classes, "class names, one per line, in YOLO index order");
  ev->add_option("--conf-cutoff", cfg.conf_cutoff, "ignore predictions below this confidence");
  ev->add_flag("--best-f1", cfg.best_f1, "also report the best-F1 point of the PR curve");
  ev->add_option("--report", cfg.report, "write the metrics table here");
  ev->add_option("--pr-out", cfg.pr_out, "write the PR curve here (default: next to the report)");
  ev->add_option("--width", cfg.image_width, "image width for YOLO files");
  ev->add_option("--height", cfg.image_height, "image height for YOLO files");

  auto* si = app.add_subcommand("simulate", "wide-only / narrow-only / fused comparison on the synthetic rig");
  si->add_option("--rig", cfg.rig, "calibration bundle with pose and plane (default: built-in rig)");
  si->add_option("--config", cfg.config, "experiment configuration JSON");
  si->add_option("--out", cfg.out, "output directory")->required();
  si->add_option("--seed", cfg.seed, "base random seed");
  si->add_option("--trials", cfg.trials, "number of trials");
  si->add_option("--iou", cfg.iou_threshold, "IoU threshold for a match");
  si->add_flag("--export-annotations", cfg.export_annotations, "write every trial as YOLO annotations");
  add_fusion_flags(si, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  const CLI::App* sub = app.get_subcommands().front();
  cfg.subcommand = sub->get_name();
  auto given = [sub](const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  cfg.zeta_given = given("--zeta");
  cfg.iou_given = given("--iou");
  cfg.faithful_given = given("--faithful");

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  spdlog::logger log("dualfuse", sink);
  log.set_pattern("%l: %v");

  try {
    if (const char* env = std::getenv("DUALFUSE_LOG")) cfg.verbosity = env;
    log.set_level(parse_verbosity(cfg.verbosity));
    cfg.validate();
    const Context ctx{cfg, out, log};
    if (cfg.subcommand == "estimate-homography") return cmd_estimate_homography(ctx);
    if (cfg.subcommand == "transform") return cmd_transform(ctx);
    if (cfg.subcommand == "fuse") return cmd_fuse(ctx);
    if (cfg.subcommand == "eval") return cmd_eval(ctx);
    return cmd_simulate(ctx);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dualfuse::cli
