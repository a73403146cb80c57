#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

namespace skewfit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Closed axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Box2 {
  Point2 lo;
  Point2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  bool contains(const Point2& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  /// Strict interior; walls are open sets so their boundary stays free.
  bool interior_contains(const Point2& p) const {
    return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y;
  }

  friend bool operator==(const Box2&, const Box2&) = default;
};

/// Regular nx-by-ny partition of a box. Cells are (a, b] so a point on an
/// interior edge belongs to the lower-index cell; the box's lower edge folds
/// into cell 0.
struct GridSpec {
  Box2 bounds;
  std::size_t nx = 1;
  std::size_t ny = 1;

  std::size_t cell_count() const { return nx * ny; }
  double cell_width() const { return bounds.width() / static_cast<double>(nx); }
  double cell_height() const { return bounds.height() / static_cast<double>(ny); }
  double cell_area() const { return cell_width() * cell_height(); }

  /// Caller guarantees bounds.contains(p).
  std::size_t cell_of(const Point2& p) const {
    return row_of(p.y) * nx + column_of(p.x);
  }
  std::size_t column_of(double x) const { return axis_index(x, bounds.lo.x, bounds.hi.x, nx); }
  std::size_t row_of(double y) const { return axis_index(y, bounds.lo.y, bounds.hi.y, ny); }

  Point2 cell_center(std::size_t cell) const {
    const auto col = cell % nx;
    const auto row = cell / nx;
    return {bounds.lo.x + (static_cast<double>(col) + 0.5) * cell_width(),
            bounds.lo.y + (static_cast<double>(row) + 0.5) * cell_height()};
  }

  Box2 cell_box(std::size_t cell) const {
    const auto col = static_cast<double>(cell % nx);
    const auto row = static_cast<double>(cell / nx);
    return {{bounds.lo.x + col * cell_width(), bounds.lo.y + row * cell_height()},
            {bounds.lo.x + (col + 1.0) * cell_width(), bounds.lo.y + (row + 1.0) * cell_height()}};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  static std::size_t axis_index(double v, double lo, double hi, std::size_t n) {
    const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
    const double c = std::ceil(t) - 1.0;
    if (c <= 0.0) return 0;
    const auto idx = static_cast<std::size_t>(c);
    return idx >= n ? n - 1 : idx;
  }
};

}  // namespace skewfit
