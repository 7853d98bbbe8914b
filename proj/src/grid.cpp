#include "wavetrack/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wavetrack {

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 8) throw std::invalid_argument("Grid: 1 to 8 axes supported");
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const Axis& a = axes_[i];
    if (a.count < 3 || !(a.max > a.min) || !std::isfinite(a.min) || !std::isfinite(a.max)) {
      std::ostringstream msg;
      msg << "Grid: axis " << i << " needs count >= 3 and max > min";
      throw std::invalid_argument(msg.str());
    }
  }
  strides_.assign(axes_.size(), 1);
  for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * static_cast<std::size_t>(axes_[i + 1].count);
  size_ = strides_[0] * static_cast<std::size_t>(axes_[0].count);
}

double Grid::max_spacing() const {
  double m = 0.0;
  for (const Axis& a : axes_) m = std::max(m, a.spacing());
  return m;
}

std::size_t Grid::Index(std::span<const int> idx) const {
  std::size_t n = 0;
  for (int i = 0; i < dims(); ++i) n += strides_[i] * static_cast<std::size_t>(idx[i]);
  return n;
}

void Grid::Unravel(std::size_t n, std::span<int> idx) const {
  for (int i = 0; i < dims(); ++i) {
    idx[i] = static_cast<int>(n / strides_[i]);
    n %= strides_[i];
  }
}

Eigen::VectorXd Grid::Node(std::size_t n) const {
  Eigen::VectorXd x(dims());
  for (int i = 0; i < dims(); ++i) {
    x[i] = axes_[i].node(static_cast<int>(n / strides_[i]));
    n %= strides_[i];
  }
  return x;
}

bool Grid::operator==(const Grid& other) const {
  if (axes_.size() != other.axes_.size()) return false;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].min != other.axes_[i].min || axes_[i].max != other.axes_[i].max ||
        axes_[i].count != other.axes_[i].count)
      return false;
  }
  return true;
}

Stencil MakeStencil(const Grid& grid, std::span<const double> x) {
  Stencil st;
  for (int a = 0; a < grid.dims(); ++a) {
    const Axis& ax = grid.axis(a);
    double u = (x[a] - ax.min) / ax.spacing();
    if (u < 0.0) {
      u = 0.0;
      st.extrapolated = true;
    } else if (u > ax.count - 1) {
      u = ax.count - 1;
      st.extrapolated = true;
    }
    int i = static_cast<int>(std::floor(u));
    if (i >= ax.count - 1) i = ax.count - 2;
    st.frac[a] = u - i;
    st.base += grid.stride(a) * static_cast<std::size_t>(i);
    st.step[a] = grid.stride(a);
  }
  return st;
}

}  // namespace wavetrack
