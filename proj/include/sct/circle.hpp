#pragma once

// Arithmetic on the circle T = R/Z, represented by [0,1).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace sct {

/// Reduce a real number to its representative in [0,1).
inline double wrap_unit(double x) noexcept {
  double r = x - std::floor(x);
  // x - floor(x) rounds up to 1.0 for tiny negative x.
  return r >= 1.0 ? 0.0 : r;
}

/// Signed representative of a displacement on the circle, in [-1/2, 1/2).
inline double wrap_signed(double d) noexcept {
  double r = d - std::floor(d + 0.5);
  return r >= 0.5 ? r - 1.0 : r;
}

class CirclePoint {
 public:
  constexpr CirclePoint() noexcept = default;
  explicit CirclePoint(double x) noexcept : value_(wrap_unit(x)) {}

  double value() const noexcept { return value_; }

  friend CirclePoint operator+(CirclePoint p, double shift) noexcept {
    return CirclePoint(p.value_ + shift);
  }
  friend CirclePoint operator-(CirclePoint p, double shift) noexcept {
    return CirclePoint(p.value_ - shift);
  }
  // Exact comparison on the representative.
  friend bool operator==(CirclePoint, CirclePoint) = default;
  friend auto operator<=>(CirclePoint, CirclePoint) = default;

 private:
  double value_ = 0.0;
};

/// Euclidean distance on T: min(|a-b|, 1-|a-b|).
inline double circle_dist(double a, double b) noexcept {
  double d = std::fabs(wrap_unit(a) - wrap_unit(b));
  return std::min(d, 1.0 - d);
}

inline double circle_dist(CirclePoint a, CirclePoint b) noexcept {
  return circle_dist(a.value(), b.value());
}

/// Closed arc [start, start + length] traversed counter-clockwise.
class Arc {
 public:
  Arc(CirclePoint start, double length) : start_(start), length_(length) {
    if (!(length >= 0.0 && length <= 1.0)) {
      throw std::invalid_argument("arc length must lie in [0,1]");
    }
  }

  CirclePoint start() const noexcept { return start_; }
  double length() const noexcept { return length_; }
  CirclePoint end() const noexcept { return start_ + length_; }

  bool contains(CirclePoint p) const noexcept {
    if (length_ >= 1.0) return true;
    return wrap_unit(p.value() - start_.value()) <= length_;
  }

 private:
  CirclePoint start_;
  double length_;
};

/// Shortest arc containing every point; its length is one minus the largest
/// circular gap between consecutive sorted points.
inline Arc smallest_covering_arc(std::span<const double> points) {
  if (points.empty()) throw std::invalid_argument("empty point set");
  std::vector<double> sorted(points.size());
  std::transform(points.begin(), points.end(), sorted.begin(), wrap_unit);
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  // The gap that wraps from the last point back to the first.
  double best_gap = 1.0 - (sorted.back() - sorted.front());
  std::size_t best_start = 0;
  for (std::size_t k = 1; k < n; ++k) {
    double gap = sorted[k] - sorted[k - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best_start = k;
    }
  }
  // Written so that the no-wrap case is exact: last minus first.
  double length = best_start == 0 ? sorted.back() - sorted.front()
                                  : sorted[best_start - 1] + (1.0 - sorted[best_start]);
  return Arc(CirclePoint(sorted[best_start]), std::clamp(length, 0.0, 1.0));
}

inline Arc smallest_covering_arc(std::span<const CirclePoint> points) {
  std::vector<double> raw;
  raw.reserve(points.size());
  for (auto p : points) raw.push_back(p.value());
  return smallest_covering_arc(std::span<const double>(raw));
}

}  // namespace sct
