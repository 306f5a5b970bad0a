#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "dualfuse/camgeom.hpp"

namespace dualfuse {

/// The ten traffic-light classes of the dual-camera dataset, in order of
/// decreasing instance count.
enum class TrafficLightClass {
  Green,
  Red,
  GreenUp,
  EmptyCountDown,
  CountDown,
  Yellow,
  Empty,
  GreenRight,
  GreenLeft,
  RedYellow,
};

inline constexpr std::size_t kTrafficLightClassCount = 10;

/// Canonical display names, indexed by TrafficLightClass.
inline constexpr std::array<std::string_view, kTrafficLightClassCount> kTrafficLightClassNames = {
    "Green", "Red",   "Green-up",    "Empty-count-down", "Count-down",
    "Yellow", "Empty", "Green-right", "Green-left",       "Red-yellow",
};

/// Object class: one of the known traffic-light classes, or any other name
/// (merged super-classes, foreign datasets). Compares by name.
class ClassLabel {
 public:
  ClassLabel() : value_(TrafficLightClass::Green) {}
  ClassLabel(TrafficLightClass c) : value_(c) {}  // NOLINT(google-explicit-constructor)

  /// Known names (case-insensitive) map to the enumeration; anything else is
  /// kept verbatim.
  static ClassLabel from_name(std::string_view name);

  std::string name() const;
  std::optional<TrafficLightClass> known() const;

  bool operator==(const ClassLabel& other) const { return name() == other.name(); }
  bool operator<(const ClassLabel& other) const { return name() < other.name(); }

 private:
  std::variant<TrafficLightClass, std::string> value_;
};

/// Axis-aligned, real-valued pixel rectangle with a class and a score.
struct BBox {
  double x_min{0};
  double y_min{0};
  double x_max{1};
  double y_max{1};
  ClassLabel label{};
  double confidence{1};

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  /// Corners in positive-signed-area order: (min,min), (max,min), (max,max), (min,max).
  PixelPoint corner(int i) const;

  bool is_valid() const;
  void validate() const;  ///< throws InvariantViolation

  bool operator==(const BBox&) const = default;
};

/// Area of the rectangle intersection; 0 when disjoint.
double intersection_area(const BBox& a, const BBox& b);

/// Intersection over union of two boxes, in [0, 1].
double iou_boxes(const BBox& a, const BBox& b);

}  // namespace dualfuse
