#include "dualfuse/ioformats.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "dualfuse/errors.hpp"

namespace dualfuse {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> default_class_names() {
  return {kTrafficLightClassNames.begin(), kTrafficLightClassNames.end()};
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t j = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > j) out.push_back(s.substr(j, i - j));
  }
  return out;
}

// Calls fn(line_number, line) for every line, numbering from 1.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++line_no;
    if (!(line.empty() && end == std::string_view::npos)) fn(line_no, line);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
}

std::optional<double> to_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> to_long(std::string_view tok) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// YOLO

std::vector<BBox> parse_yolo_annotation(std::string_view text, int image_width, int image_height,
                                        std::span<const std::string> class_names,
                                        std::string_view source) {
  if (image_width <= 0 || image_height <= 0)
    throw InvariantViolation("image size must be positive to parse YOLO annotations");
  std::vector<BBox> boxes;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    const auto tok = split_ws(line);
    const std::string loc = location(source, line_no);
    if (tok.size() != 5 && tok.size() != 6)
      throw ParseError(loc, "expected 5 or 6 fields, got " + std::to_string(tok.size()));

    const auto cls = to_long(tok[0]);
    if (!cls || *cls < 0) throw ParseError(loc, "class index '" + std::string(tok[0]) + "' is not a non-negative integer");
    if (std::size_t(*cls) >= class_names.size())
      throw ClassIndexOutOfRange(loc, "class index " + std::to_string(*cls) + " out of range (" +
                                          std::to_string(class_names.size()) + " classes)");
    double v[5] = {0, 0, 0, 0, 1};
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto d = to_double(tok[i]);
      if (!d) throw ParseError(loc, "field " + std::to_string(i + 1) + " '" + std::string(tok[i]) + "' is not a number");
      v[i - 1] = *d;
    }
    if (!(v[2] > 0) || !(v[3] > 0)) throw ParseError(loc, "box width and height must be positive");
    if (v[4] < 0 || v[4] > 1) throw ParseError(loc, "confidence must lie in [0, 1]");

    BBox b;
    b.x_min = (v[0] - v[2] / 2) * image_width;
    b.x_max = (v[0] + v[2] / 2) * image_width;
    b.y_min = (v[1] - v[3] / 2) * image_height;
    b.y_max = (v[1] + v[3] / 2) * image_height;
    b.label = ClassLabel::from_name(class_names[std::size_t(*cls)]);
    b.confidence = v[4];
    if (!b.is_valid()) throw ParseError(loc, "box collapses to zero size");
    boxes.push_back(b);
  });
  return boxes;
}

std::string serialize_yolo_annotation(std::span<const BBox> boxes, int image_width,
                                      int image_height, std::span<const std::string> class_names) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_names.size(); ++i)
    index.emplace(ClassLabel::from_name(class_names[i]).name(), i);

  std::string out;
  for (const auto& b : boxes) {
    const auto it = index.find(b.label.name());
    if (it == index.end()) throw UnknownClass("class '" + b.label.name() + "' is not in the class list");
    const double w = double(image_width);
    const double h = double(image_height);
    out += std::to_string(it->second);
    out += ' ' + fixed6((b.x_min + b.x_max) / 2 / w);
    out += ' ' + fixed6((b.y_min + b.y_max) / 2 / h);
    out += ' ' + fixed6(b.width() / w);
    out += ' ' + fixed6(b.height() / h);
    if (b.confidence != 1.0) out += ' ' + fixed6(b.confidence);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// VOC

namespace {

namespace pt = boost::property_tree;

const pt::ptree& require_child(const pt::ptree& node, const std::string& name,
                               const std::string& path) {
  const auto child = node.get_child_optional(name);
  if (!child) throw ParseError(path.empty() ? name : path + "/" + name, "missing element '" + name + "'");
  return *child;
}

double require_number(const pt::ptree& node, const std::string& name, const std::string& path) {
  const auto& child = require_child(node, name, path);
  const std::string text(trim(child.get_value<std::string>()));
  const auto v = to_double(text);
  if (!v) throw ParseError(path + "/" + name, "'" + text + "' is not a number");
  return *v;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

VocAnnotation parse_voc_annotation(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream is{std::string(xml)};
    pt::read_xml(is, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("line " + std::to_string(e.line()), "malformed XML: " + e.message());
  }

  const pt::ptree& root = require_child(tree, "annotation", "");
  const std::string root_path = "annotation";
  VocAnnotation out;
  out.filename = root.get<std::string>("filename", "");

  const pt::ptree& size = require_child(root, "size", root_path);
  const double w = require_number(size, "width", root_path + "/size");
  const double h = require_number(size, "height", root_path + "/size");
  if (!(w > 0) || !(h > 0)) throw ParseError(root_path + "/size", "image size must be positive");
  out.width = int(w);
  out.height = int(h);
  if (size.get_child_optional("depth")) out.depth = int(require_number(size, "depth", root_path + "/size"));

  std::size_t ordinal = 0;
  for (const auto& [key, obj] : root) {
    if (key != "object") continue;
    const std::string path = root_path + "/object[" + std::to_string(++ordinal) + "]";
    const std::string name(trim(require_child(obj, "name", path).get_value<std::string>()));
    if (name.empty()) throw ParseError(path + "/name", "empty class name");
    const pt::ptree& bnd = require_child(obj, "bndbox", path);
    const std::string bpath = path + "/bndbox";

    BBox b;
    b.x_min = require_number(bnd, "xmin", bpath) - 1;
    b.y_min = require_number(bnd, "ymin", bpath) - 1;
    b.x_max = require_number(bnd, "xmax", bpath);
    b.y_max = require_number(bnd, "ymax", bpath);
    b.label = ClassLabel::from_name(name);
    b.confidence = 1.0;
    if (!b.is_valid()) throw ParseError(bpath, "xmax/ymax precede xmin/ymin");
    out.boxes.push_back(b);
  }
  return out;
}

std::string serialize_voc_annotation(const VocAnnotation& a) {
  std::ostringstream os;
  os << "<annotation>\n";
  os << "  <filename>" << xml_escape(a.filename) << "</filename>\n";
  os << "  <size>\n    <width>" << a.width << "</width>\n    <height>" << a.height
     << "</height>\n    <depth>" << a.depth << "</depth>\n  </size>\n";
  for (const auto& b : a.boxes) {
    const long x0 = std::lround(b.x_min);
    const long y0 = std::lround(b.y_min);
    const long x1 = std::max(std::lround(b.x_max), x0 + 1);
    const long y1 = std::max(std::lround(b.y_max), y0 + 1);
    os << "  <object>\n    <name>" << xml_escape(b.label.name()) << "</name>\n";
    os << "    <bndbox>\n      <xmin>" << x0 + 1 << "</xmin>\n      <ymin>" << y0 + 1
       << "</ymin>\n      <xmax>" << x1 << "</xmax>\n      <ymax>" << y1 << "</ymax>\n    </bndbox>\n";
    os << "  </object>\n";
  }
  os << "</annotation>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

const json& require_key(const json& obj, const std::string& key, const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(full, "missing key");
  return *it;
}

double require_double(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require_key(obj, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  return v.get<double>();
}

int require_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require_key(obj, key, path);
  if (!v.is_number_integer()) throw SchemaError(path + "." + key, "expected an integer");
  return v.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> require_vector(const json& obj, const std::string& key,
                                           const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  const json& v = require_key(obj, key, path);
  if (!v.is_array() || v.size() != std::size_t(N))
    throw SchemaError(full, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[std::size_t(i)].is_number()) throw SchemaError(full + "[" + std::to_string(i) + "]", "expected a number");
    out(i) = v[std::size_t(i)].get<double>();
  }
  return out;
}

Eigen::Matrix3d row_major(const Eigen::Matrix<double, 9, 1>& v) {
  Eigen::Matrix3d m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

json matrix_json(const Eigen::Matrix3d& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

void read_camera(const json& root, const std::string& key, CameraIntrinsics& k, DistortionCoeffs& d) {
  const json& cam = require_key(root, key, "");
  k.fx = require_double(cam, "fx", key);
  k.fy = require_double(cam, "fy", key);
  k.cx = require_double(cam, "cx", key);
  k.cy = require_double(cam, "cy", key);
  k.width = require_int(cam, "width", key);
  k.height = require_int(cam, "height", key);
  d.k1 = require_double(cam, "k1", key);
  d.k2 = require_double(cam, "k2", key);
  d.k3 = require_double(cam, "k3", key);
  d.p1 = require_double(cam, "p1", key);
  d.p2 = require_double(cam, "p2", key);
  if (!k.is_valid()) throw InvariantViolation(key + ": invalid intrinsics");
  if (!d.is_valid()) throw InvariantViolation(key + ": distortion coefficients must be finite");
}

json camera_json(const CameraIntrinsics& k, const DistortionCoeffs& d) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width},
              {"height", k.height}, {"k1", d.k1}, {"k2", d.k2}, {"k3", d.k3}, {"p1", d.p1},
              {"p2", d.p2}};
}

}  // namespace

void CalibrationBundle::validate() const {
  if (!narrow.is_valid()) throw InvariantViolation("narrow: invalid intrinsics");
  if (!wide.is_valid()) throw InvariantViolation("wide: invalid intrinsics");
  if (!narrow_distortion.is_valid()) throw InvariantViolation("narrow: distortion coefficients must be finite");
  if (!wide_distortion.is_valid()) throw InvariantViolation("wide: distortion coefficients must be finite");
  if (pose && !pose->is_valid()) throw InvariantViolation("pose.R: not a proper rotation matrix");
  if (plane && !plane->is_valid()) throw InvariantViolation("plane: normal must be unit length and d > 0");
  std::set<std::string> seen;
  for (const auto& c : classes) {
    if (c.empty()) throw InvariantViolation("classes: empty class name");
    if (!seen.insert(ClassLabel::from_name(c).name()).second)
      throw InvariantViolation("classes: duplicate class name '" + c + "'");
  }
}

CalibrationBundle parse_calibration(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("<root>", "expected an object");

  CalibrationBundle b;
  read_camera(root, "narrow", b.narrow, b.narrow_distortion);
  read_camera(root, "wide", b.wide, b.wide_distortion);
  try {
    b.homography = Homography(row_major(require_vector<9>(root, "homography", "")));
  } catch (const Singular& e) {
    throw InvariantViolation(std::string("homography: ") + e.what());
  }

  if (root.contains("pose")) {
    const json& p = root["pose"];
    RelativePose pose;
    pose.rotation = row_major(require_vector<9>(p, "R", "pose"));
    pose.translation = require_vector<3>(p, "t", "pose");
    b.pose = pose;
  }
  if (root.contains("plane")) {
    const json& p = root["plane"];
    PlaneSpec plane;
    plane.normal = require_vector<3>(p, "n", "plane");
    plane.distance = require_double(p, "d", "plane");
    b.plane = plane;
  }
  if (root.contains("classes")) {
    const json& c = root["classes"];
    if (!c.is_array()) throw SchemaError("classes", "expected an array of strings");
    b.classes.clear();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c[i].is_string()) throw SchemaError("classes[" + std::to_string(i) + "]", "expected a string");
      b.classes.push_back(c[i].get<std::string>());
    }
  }
  b.validate();
  return b;
}

std::string serialize_calibration(const CalibrationBundle& b) {
  json root;
  root["narrow"] = camera_json(b.narrow, b.narrow_distortion);
  root["wide"] = camera_json(b.wide, b.wide_distortion);
  root["homography"] = matrix_json(b.homography.matrix());
  if (b.pose) {
    root["pose"] = json{{"R", matrix_json(b.pose->rotation)},
                        {"t", {b.pose->translation.x(), b.pose->translation.y(), b.pose->translation.z()}}};
  }
  if (b.plane) {
    root["plane"] = json{{"n", {b.plane->normal.x(), b.plane->normal.y(), b.plane->normal.z()}},
                         {"d", b.plane->distance}};
  }
  root["classes"] = b.classes;
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Correspondences

std::vector<Correspondence> parse_correspondences(std::string_view text, std::string_view source) {
  std::vector<Correspondence> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) return;
    const auto tok = split_ws(line);
    const std::string loc = location(source, line_no);
    if (tok.size() != 4) throw ParseError(loc, "expected 4 numbers, got " + std::to_string(tok.size()) + " fields");
    double v[4];
    for (std::size_t i = 0; i < 4; ++i) {
      const auto d = to_double(tok[i]);
      if (!d) throw ParseError(loc, "'" + std::string(tok[i]) + "' is not a number");
      v[i] = *d;
    }
    out.push_back({PixelPoint(v[0], v[1]), PixelPoint(v[2], v[3])});
  });
  return out;
}

std::string serialize_correspondences(std::span<const Correspondence> pairs) {
  std::string out = "# src_x src_y dst_x dst_y\n";
  char buf[160];
  for (const auto& c : pairs) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", c.src.x(), c.src.y(), c.dst.x(), c.dst.y());
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame pairing

std::map<std::string, std::vector<fs::path>> annotation_files_by_stem(const fs::path& dir) {
  std::map<std::string, std::vector<fs::path>> out;
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot read directory '" + dir.string() + "': " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if (name.front() == '.' || (ext != ".txt" && ext != ".xml")) continue;
    out[entry.path().stem().string()].push_back(entry.path());
  }
  for (auto& [stem, files] : out) std::sort(files.begin(), files.end());
  return out;
}

FramePairIndex build_frame_pair_index(const fs::path& narrow_dir, const fs::path& wide_dir) {
  const auto narrow = annotation_files_by_stem(narrow_dir);
  const auto wide = annotation_files_by_stem(wide_dir);
  FramePairIndex index;

  auto note_ambiguous = [&](const std::string& stem, const std::vector<fs::path>& files,
                            const char* side) {
    if (files.size() > 1)
      index.diagnostics.push_back(std::string(side) + " '" + stem + "': " +
                                  std::to_string(files.size()) + " files share the stem, using " +
                                  files.front().filename().string());
  };

  for (const auto& [stem, files] : narrow) {
    const auto it = wide.find(stem);
    if (it == wide.end()) {
      index.diagnostics.push_back("narrow '" + files.front().filename().string() + "' has no wide partner");
      continue;
    }
    note_ambiguous(stem, files, "narrow");
    note_ambiguous(stem, it->second, "wide");
    index.pairs.push_back({files.front(), it->second.front(), stem});
  }
  for (const auto& [stem, files] : wide) {
    if (!narrow.count(stem))
      index.diagnostics.push_back("wide '" + files.front().filename().string() + "' has no narrow partner");
  }
  return index;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file_atomic(const fs::path& path, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                       std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("error while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

}  // namespace dualfuse
