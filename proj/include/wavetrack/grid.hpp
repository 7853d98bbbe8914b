#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace wavetrack {

struct Axis {
  double min = 0.0;
  double max = 1.0;
  int count = 3;

  double spacing() const { return (max - min) / (count - 1); }
  double node(int i) const { return min + i * spacing(); }
};

// Rectangular node grid, row-major (last axis varies fastest).
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes);

  int dims() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  const Axis& axis(int i) const { return axes_[i]; }
  const std::vector<Axis>& axes() const { return axes_; }
  double spacing(int i) const { return axes_[i].spacing(); }
  double max_spacing() const;
  std::size_t stride(int i) const { return strides_[i]; }

  std::size_t Index(std::span<const int> idx) const;
  void Unravel(std::size_t n, std::span<int> idx) const;
  Eigen::VectorXd Node(std::size_t n) const;

  bool operator==(const Grid& other) const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Multilinear interpolation stencil for one point: lower corner index and
// per-axis fractional weight. Coordinates outside the grid clamp to the face.
struct Stencil {
  std::size_t base = 0;
  double frac[8] = {};
  std::size_t step[8] = {};
  bool extrapolated = false;
};

Stencil MakeStencil(const Grid& grid, std::span<const double> x);

template <typename T>
double Interpolate(const Stencil& st, int dims, const T* data) {
  double acc = 0.0;
  const int corners = 1 << dims;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t idx = st.base;
    for (int a = 0; a < dims; ++a) {
      if (c & (1 << a)) {
        w *= st.frac[a];
        idx += st.step[a];
      } else {
        w *= 1.0 - st.frac[a];
      }
    }
    if (w != 0.0) acc += w * static_cast<double>(data[idx]);
  }
  return acc;
}

}  // namespace wavetrack
