#pragma once

#include <array>
#include <vector>

namespace wavetrack {

struct Circle {
  std::array<double, 2> center{0.0, 0.0};
  double radius = 0.0;
};

// Smallest circle enclosing every point (Welzl, deterministic shuffle).
// An empty input yields a zero circle at the origin.
Circle MinEnclosingCircle(std::vector<std::array<double, 2>> points);

}  // namespace wavetrack
