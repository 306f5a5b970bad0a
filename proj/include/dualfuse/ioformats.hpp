#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualfuse/bbox.hpp"
#include "dualfuse/boxwarp.hpp"
#include "dualfuse/camgeom.hpp"
#include "dualfuse/homography.hpp"

namespace dualfuse {

/// The ten dataset class names in canonical order (YOLO index order).
std::vector<std::string> default_class_names();

// ---------------------------------------------------------------------------
// YOLO text: one `class x_center y_center width height [confidence]` line per
// box, coordinates normalized by the image size.

/// Throws ParseError (location "<source>:<line>") on malformed lines and
/// ClassIndexOutOfRange for indices past `class_names`. A missing confidence
/// column means 1.0. Coordinates are taken as written, never clamped.
std::vector<BBox> parse_yolo_annotation(std::string_view text, int image_width, int image_height,
                                        std::span<const std::string> class_names,
                                        std::string_view source = "yolo");

/// Six decimals per field; the confidence column is written only for boxes
/// whose confidence is not exactly 1. Throws UnknownClass.
std::string serialize_yolo_annotation(std::span<const BBox> boxes, int image_width,
                                      int image_height, std::span<const std::string> class_names);

// ---------------------------------------------------------------------------
// PASCAL VOC XML. On disk, boxes are 1-based and inclusive; internally they are
// 0-based half-open reals: (xmin - 1, ymin - 1, xmax, ymax).

struct VocAnnotation {
  std::string filename;
  int width{0};
  int height{0};
  int depth{3};
  std::vector<BBox> boxes;
};

/// Throws ParseError whose location names the missing or malformed element,
/// e.g. "annotation/object[2]/bndbox".
VocAnnotation parse_voc_annotation(std::string_view xml);

/// Rounds to whole pixels. Boxes narrower than a pixel are widened to one.
std::string serialize_voc_annotation(const VocAnnotation& annotation);

// ---------------------------------------------------------------------------
// Calibration bundle (JSON).
//
//   {
//     "narrow": {"fx", "fy", "cx", "cy", "width", "height", "k1", "k2", "k3", "p1", "p2"},
//     "wide":   { same keys },
//     "homography": [9 numbers, row-major],
//     "pose":  {"R": [9 numbers, row-major], "t": [3 numbers]},   (optional)
//     "plane": {"n": [3 numbers], "d": number},                  (optional)
//     "classes": ["Green", ...]                                  (optional)
//   }

struct CalibrationBundle {
  CameraIntrinsics narrow;
  DistortionCoeffs narrow_distortion;
  CameraIntrinsics wide;
  DistortionCoeffs wide_distortion;
  Homography homography;
  std::optional<RelativePose> pose;
  std::optional<PlaneSpec> plane;
  std::vector<std::string> classes = default_class_names();

  TransformChain chain() const {
    return TransformChain{narrow, narrow_distortion, wide, wide_distortion, homography};
  }
  void validate() const;  ///< throws InvariantViolation
};

/// Throws SchemaError (with key path) or InvariantViolation.
CalibrationBundle parse_calibration(std::string_view json_text);
std::string serialize_calibration(const CalibrationBundle& bundle);

// ---------------------------------------------------------------------------
// Correspondences: `src_x src_y dst_x dst_y` per line, `#` starts a comment.

std::vector<Correspondence> parse_correspondences(std::string_view text,
                                                  std::string_view source = "correspondences");
std::string serialize_correspondences(std::span<const Correspondence> pairs);

// ---------------------------------------------------------------------------
// Frame pairing by identical filename stem.

struct FramePair {
  std::filesystem::path narrow_file;
  std::filesystem::path wide_file;
  std::string frame_id;
};

struct FramePairIndex {
  std::vector<FramePair> pairs;          ///< sorted by frame_id
  std::vector<std::string> diagnostics;  ///< unpaired or ambiguous files
};

/// Annotation files (.txt, .xml) of a directory grouped by stem, each group
/// sorted by path. Hidden files are skipped. Throws IoError.
std::map<std::string, std::vector<std::filesystem::path>> annotation_files_by_stem(
    const std::filesystem::path& dir);

/// Pairs annotation files by stem. Throws IoError when a directory cannot be listed.
FramePairIndex build_frame_pair_index(const std::filesystem::path& narrow_dir,
                                      const std::filesystem::path& wide_dir);

// ---------------------------------------------------------------------------
// Files.

/// Throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file. Throws IoError.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace dualfuse
