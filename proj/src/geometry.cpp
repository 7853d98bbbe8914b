#include "wavetrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace wavetrack {
namespace {

using Point = std::array<double, 2>;

double Dist(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

bool Inside(const Circle& c, const Point& p) {
  return Dist(c.center, p) <= c.radius * (1.0 + 1e-12) + 1e-15;
}

Circle FromTwo(const Point& a, const Point& b) {
  return {{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])}, 0.5 * Dist(a, b)};
}

Circle FromThree(const Point& a, const Point& b, const Point& c) {
  const double bx = b[0] - a[0], by = b[1] - a[1];
  const double cx = c[0] - a[0], cy = c[1] - a[1];
  const double d = 2.0 * (bx * cy - by * cx);
  if (std::abs(d) < 1e-300) {
    // Collinear: the widest pair spans the circle.
    Circle best = FromTwo(a, b);
    for (const Circle& cand : {FromTwo(a, c), FromTwo(b, c)}) {
      if (cand.radius > best.radius) best = cand;
    }
    return best;
  }
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  return {{a[0] + ux, a[1] + uy}, std::hypot(ux, uy)};
}

}  // namespace

Circle MinEnclosingCircle(std::vector<Point> points) {
  if (points.empty()) return {};
  std::mt19937_64 rng(0x5eed);
  std::shuffle(points.begin(), points.end(), rng);

  Circle c{points[0], 0.0};
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (Inside(c, points[i])) continue;
    c = {points[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (Inside(c, points[j])) continue;
      c = FromTwo(points[i], points[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (Inside(c, points[k])) continue;
        c = FromThree(points[i], points[j], points[k]);
      }
    }
  }
  // Absorb rounding so every input point is inside.
  double r = c.radius;
  for (const Point& p : points) r = std::max(r, Dist(c.center, p));
  c.radius = r;
  return c;
}

}  // namespace wavetrack
