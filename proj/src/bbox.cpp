#include "dualfuse/bbox.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "dualfuse/errors.hpp"

namespace dualfuse {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

ClassLabel ClassLabel::from_name(std::string_view name) {
  for (std::size_t i = 0; i < kTrafficLightClassNames.size(); ++i) {
    if (iequals(name, kTrafficLightClassNames[i])) return ClassLabel(static_cast<TrafficLightClass>(i));
  }
  ClassLabel out;
  out.value_ = std::string(name);
  return out;
}

std::string ClassLabel::name() const {
  if (const auto* c = std::get_if<TrafficLightClass>(&value_))
    return std::string(kTrafficLightClassNames[static_cast<std::size_t>(*c)]);
  return std::get<std::string>(value_);
}

std::optional<TrafficLightClass> ClassLabel::known() const {
  if (const auto* c = std::get_if<TrafficLightClass>(&value_)) return *c;
  return std::nullopt;
}

PixelPoint BBox::corner(int i) const {
  switch (i & 3) {
    case 0: return {x_min, y_min};
    case 1: return {x_max, y_min};
    case 2: return {x_max, y_max};
    default: return {x_min, y_max};
  }
}

bool BBox::is_valid() const {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
         std::isfinite(y_max) && x_min < x_max && y_min < y_max && confidence >= 0 &&
         confidence <= 1;
}

void BBox::validate() const {
  if (is_valid()) return;
  std::ostringstream os;
  os << "invalid box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max
     << ", conf " << confidence << ")";
  throw InvariantViolation(os.str());
}

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

double iou_boxes(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

}  // namespace dualfuse
