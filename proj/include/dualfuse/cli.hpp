#pragma once

// Command-line front end: estimate-homography, transform, fuse, eval and
// simulate. Exit codes are 0 on success, 2 for input/parse errors and 3 for
// numeric or degenerate failures, for every subcommand.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace dualfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

struct CliConfig {
  std::string subcommand;

  std::filesystem::path correspondences;
  std::filesystem::path bundle;
  std::filesystem::path narrow_dir;
  std::filesystem::path wide_dir;
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::filesystem::path merge_map;
  std::filesystem::path classes;
  std::filesystem::path report;
  std::filesystem::path pr_out;
  std::filesystem::path rig;
  std::filesystem::path config;
  std::filesystem::path out;

  double zeta{0.5};
  double iou_threshold{0.3};
  bool faithful_mode{true};
  double conf_cutoff{0.0};
  bool best_f1{false};
  int jobs{1};
  int image_width{1920};
  int image_height{1080};
  bool export_annotations{false};

  // Set only when given on the command line; they then override the
  // experiment config file.
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  bool zeta_given{false};
  bool iou_given{false};
  bool faithful_given{false};

  /// "error", "warn", "info" or "debug"; read from DUALFUSE_LOG.
  std::string verbosity{"warn"};

  /// Range-checks numeric flags and checks that input paths exist.
  /// Throws InputError.
  void validate() const;
};

/// Parses and runs one command line. Never throws; errors are reported on
/// `err` and mapped to the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualfuse::cli
