#pragma once

// Axis-aligned boxes in pixel coordinates (origin top-left, y grows down).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "semrel/error.hpp"

namespace semrel {

struct BBox {
  double x = 0.0;  // left edge
  double y = 0.0;  // top edge
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double center_x() const noexcept { return x + 0.5 * w; }
  double center_y() const noexcept { return y + 0.5 * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

enum class Position {
  kTopLeft,
  kTopCenter,
  kTopRight,
  kCenterLeft,
  kCenter,
  kCenterRight,
  kBottomLeft,
  kBottomCenter,
  kBottomRight,
};

inline constexpr std::array<std::string_view, 9> kPositionLabels = {
    "top-left",    "top-center",    "top-right",     //
    "center-left", "center",        "center-right",  //
    "bottom-left", "bottom-center", "bottom-right",
};

constexpr std::string_view to_string(Position p) { return kPositionLabels[static_cast<int>(p)]; }

inline std::optional<Position> parse_position(std::string_view s) {
  for (std::size_t i = 0; i < kPositionLabels.size(); ++i) {
    if (kPositionLabels[i] == s) return static_cast<Position>(i);
  }
  return std::nullopt;
}

inline BBox clip_to_image(const BBox& b, ImageDims dims) {
  const double x0 = std::clamp(b.x, 0.0, static_cast<double>(dims.width));
  const double y0 = std::clamp(b.y, 0.0, static_cast<double>(dims.height));
  const double x1 = std::clamp(b.right(), 0.0, static_cast<double>(dims.width));
  const double y1 = std::clamp(b.bottom(), 0.0, static_cast<double>(dims.height));
  if (!(x1 > x0) || !(y1 > y0)) throw Error(Errc::kDegenerateBox, "box has no area inside the image");
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

inline double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

// Strictly positive shared area; touching edges do not count.
inline bool is_adjacent(const BBox& a, const BBox& b) noexcept { return intersection_area(a, b) > 0.0; }

inline double proportion(const BBox& b, ImageDims dims) {
  if (!(b.w > 0.0) || !(b.h > 0.0)) throw Error(Errc::kDegenerateBox, "box has zero area");
  return b.area() / (static_cast<double>(dims.width) * static_cast<double>(dims.height));
}

// Box center on a uniform 3x3 grid; a center on a cell boundary goes to the
// higher-index cell.
inline Position position(const BBox& b, ImageDims dims) noexcept {
  auto cell = [](double c, int extent) {
    const int k = static_cast<int>(std::floor(3.0 * c / static_cast<double>(extent)));
    return std::clamp(k, 0, 2);
  };
  const int col = cell(b.center_x(), dims.width);
  const int row = cell(b.center_y(), dims.height);
  return static_cast<Position>(row * 3 + col);
}

}  // namespace semrel
