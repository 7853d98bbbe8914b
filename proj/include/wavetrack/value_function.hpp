#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "wavetrack/grid.hpp"

namespace wavetrack {

struct ValueQuery {
  double value = 0.0;
  bool extrapolated = false;
};

// V(r, t) on a grid. Timestamps ascend; the last slice is the terminal one
// and equals l_field bit for bit.
struct ValueFunction {
  Grid grid;
  std::vector<double> times;
  std::vector<std::vector<float>> slices;
  std::vector<float> l_field;

  double t_off() const { return times.back(); }
  int slice_count() const { return static_cast<int>(times.size()); }

  // Bracketing slices for t (clamped to [0, T_off]); weight is on `hi`.
  void Bracket(double t, int& lo, int& hi, double& weight) const;

  // Multilinear in space, linear in time; out-of-grid queries clamp and flag.
  ValueQuery value_at(std::span<const double> r, double t) const;
  ValueQuery value_at(const Eigen::VectorXd& r, double t) const;

  // Central-difference gradient of the interpolated field, step = spacing.
  Eigen::VectorXd Gradient(const Eigen::VectorXd& r, double t) const;

  void Validate() const;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary layout: "WTVF", u32 version, u32 axis count, per axis (f64 min,
// f64 max, u32 count), u32 timestamp count, f64 timestamps ascending,
// then f32 slices row-major in time order. Little-endian throughout.
void SaveValueFunction(const ValueFunction& vf, const std::filesystem::path& path);
ValueFunction LoadValueFunction(const std::filesystem::path& path);

double error_l(const Eigen::MatrixXd& C, const Eigen::VectorXd& r);

}  // namespace wavetrack
