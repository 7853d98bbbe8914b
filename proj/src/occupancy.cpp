#include "wavetrack/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace wavetrack {

OccupancyGrid2D::OccupancyGrid2D(double x_min, double z_min, double resolution, int nx, int nz)
    : x_min_(x_min), z_min_(z_min), res_(resolution), nx_(nx), nz_(nz) {
  if (!(resolution > 0)) throw std::invalid_argument("OccupancyGrid2D: resolution must be > 0");
  if (nx < 1 || nz < 1) throw std::invalid_argument("OccupancyGrid2D: empty grid");
  cells_.assign(static_cast<std::size_t>(nx) * nz, 0);
}

OccupancyGrid2D OccupancyGrid2D::Covering(const Rect& box, double resolution) {
  if (!(box.x_max > box.x_min)) throw std::invalid_argument("OccupancyGrid2D: empty box");
  const int nx = static_cast<int>(std::ceil(box.Width() / resolution - 1e-9));
  const int nz = box.Height() > 0 ? static_cast<int>(std::ceil(box.Height() / resolution - 1e-9)) : 1;
  return OccupancyGrid2D(box.x_min, box.z_min, resolution, nx, nz);
}

Rect OccupancyGrid2D::extent() const {
  return {x_min_, x_min_ + nx_ * res_, z_min_, z_min_ + nz_ * res_};
}

int OccupancyGrid2D::CellX(double x) const {
  return static_cast<int>(std::floor((x - x_min_) / res_));
}

int OccupancyGrid2D::CellZ(double z) const {
  return nz_ == 1 ? 0 : static_cast<int>(std::floor((z - z_min_) / res_));
}

bool OccupancyGrid2D::Query(double x, double z, bool outside) const {
  const int i = CellX(x), j = CellZ(z);
  if (!InBounds(i, j)) return outside;
  return at(i, j);
}

void OccupancyGrid2D::FillRect(const Rect& r) {
  for (int j = 0; j < nz_; ++j) {
    const double z = CenterZ(j);
    if (nz_ > 1 && (z < r.z_min || z > r.z_max)) continue;
    for (int i = 0; i < nx_; ++i) {
      const double x = CenterX(i);
      if (x >= r.x_min && x <= r.x_max) set(i, j, true);
    }
  }
}

std::size_t OccupancyGrid2D::Count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

bool OccupancyGrid2D::SameLayout(const OccupancyGrid2D& o) const {
  return nx_ == o.nx_ && nz_ == o.nz_ && x_min_ == o.x_min_ && z_min_ == o.z_min_ &&
         res_ == o.res_;
}

OccupancyGrid2D OccupancyGrid2D::Complement() const {
  OccupancyGrid2D out = *this;
  for (auto& c : out.cells_) c = c ? 0 : 1;
  return out;
}

OccupancyGrid2D OccupancyGrid2D::Blank() const {
  OccupancyGrid2D out = *this;
  std::fill(out.cells_.begin(), out.cells_.end(), 0);
  return out;
}

OccupancyGrid2D OccupancyGrid2D::Union(const OccupancyGrid2D& o) const {
  if (!SameLayout(o)) throw std::invalid_argument("OccupancyGrid2D: layout mismatch");
  OccupancyGrid2D out = *this;
  for (std::size_t k = 0; k < cells_.size(); ++k) out.cells_[k] = cells_[k] | o.cells_[k];
  return out;
}

OccupancyGrid2D OccupancyGrid2D::Intersection(const OccupancyGrid2D& o) const {
  if (!SameLayout(o)) throw std::invalid_argument("OccupancyGrid2D: layout mismatch");
  OccupancyGrid2D out = *this;
  for (std::size_t k = 0; k < cells_.size(); ++k) out.cells_[k] = cells_[k] & o.cells_[k];
  return out;
}

void OccupancyGrid2D::WriteText(std::ostream& out) const {
  const Rect e = extent();
  out << "# box " << e.x_min << ' ' << e.x_max << ' ' << e.z_min << ' ' << e.z_max
      << " resolution " << res_ << " size " << nx_ << ' ' << nz_ << '\n';
  for (int j = nz_ - 1; j >= 0; --j) {
    for (int i = 0; i < nx_; ++i) out << (at(i, j) ? '1' : '0');
    out << '\n';
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function (lower envelope of
// parabolas).
void Transform1D(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;  // z[0] = -inf stops this before k goes negative
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> SquaredDistanceField(const OccupancyGrid2D& grid) {
  const int nx = grid.nx(), nz = grid.nz();
  std::vector<double> field(grid.size());
  for (std::size_t k = 0; k < field.size(); ++k) field[k] = grid.cells()[k] ? 0.0 : kInf;
  std::vector<double> f, d;
  f.resize(nx);
  d.resize(nx);
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i < nx; ++i) f[i] = field[grid.Index(i, j)];
    Transform1D(f, d);
    for (int i = 0; i < nx; ++i) field[grid.Index(i, j)] = d[i];
  }
  f.resize(nz);
  d.resize(nz);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nz; ++j) f[j] = field[grid.Index(i, j)];
    Transform1D(f, d);
    for (int j = 0; j < nz; ++j) field[grid.Index(i, j)] = d[j];
  }
  return field;
}

namespace {

OccupancyGrid2D Threshold(const OccupancyGrid2D& layout, const std::vector<double>& sq,
                          double radius, bool invert) {
  if (radius < 0) throw std::invalid_argument("disk morphology: negative radius");
  OccupancyGrid2D out = layout;
  const double r = radius / layout.resolution();
  const double r2 = r * r * (1.0 + 1e-12);
  for (int j = 0; j < layout.nz(); ++j) {
    for (int i = 0; i < layout.nx(); ++i) {
      const bool near = sq[layout.Index(i, j)] <= r2;
      out.set(i, j, invert ? !near : near);
    }
  }
  return out;
}

}  // namespace

DiskMorphology::DiskMorphology(const OccupancyGrid2D& grid)
    : grid_(grid), to_set_(SquaredDistanceField(grid)) {
  // Distance to the nearest clear cell where the outside is clear: the
  // distance to the border is the cell-index distance to index -1 or n.
  const std::vector<double> inner = SquaredDistanceField(grid.Complement());
  to_clear_.resize(grid.size());
  for (int j = 0; j < grid.nz(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      double edge = std::min(i + 1, grid.nx() - i);
      if (grid.nz() > 1) edge = std::min<double>(edge, std::min(j + 1, grid.nz() - j));
      to_clear_[grid.Index(i, j)] = std::min(inner[grid.Index(i, j)], edge * edge);
    }
  }
}

OccupancyGrid2D DiskMorphology::Dilate(double radius) const {
  return Threshold(grid_, to_set_, radius, false);
}

OccupancyGrid2D DiskMorphology::Erode(double radius) const {
  return Threshold(grid_, to_clear_, radius, true);
}

OccupancyGrid2D DilateDisk(const OccupancyGrid2D& grid, double radius) {
  return DiskMorphology(grid).Dilate(radius);
}

OccupancyGrid2D ErodeDisk(const OccupancyGrid2D& grid, double radius) {
  return DiskMorphology(grid).Erode(radius);
}

}  // namespace wavetrack
