#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wavetrack/dynamics.hpp"

namespace wavetrack {

struct Rect {
  double x_min = 0, x_max = 0, z_min = 0, z_max = 0;

  bool Contains(double x, double z) const {
    return x >= x_min && x <= x_max && z >= z_min && z <= z_max;
  }
  bool Intersects(const Rect& o) const {
    return x_min <= o.x_max && o.x_min <= x_max && z_min <= o.z_max && o.z_min <= z_max;
  }
  double Width() const { return x_max - x_min; }
  double Height() const { return z_max - z_min; }
};

// Boolean raster over an axis-aligned (x, z) box. Cell (i, j) spans
// [x_min + i res, x_min + (i+1) res) x [z_min + j res, ...); storage is
// row-major with x fastest.
class OccupancyGrid2D {
 public:
  OccupancyGrid2D() = default;
  OccupancyGrid2D(double x_min, double z_min, double resolution, int nx, int nz);
  // Cells covering `box` at the given resolution (rounded outward).
  static OccupancyGrid2D Covering(const Rect& box, double resolution);

  double x_min() const { return x_min_; }
  double z_min() const { return z_min_; }
  double resolution() const { return res_; }
  int nx() const { return nx_; }
  int nz() const { return nz_; }
  std::size_t size() const { return cells_.size(); }
  Rect extent() const;

  bool InBounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < nz_; }
  bool at(int i, int j) const { return cells_[Index(i, j)] != 0; }
  void set(int i, int j, bool v) { cells_[Index(i, j)] = v ? 1 : 0; }
  std::size_t Index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

  double CenterX(int i) const { return x_min_ + (i + 0.5) * res_; }
  double CenterZ(int j) const { return z_min_ + (j + 0.5) * res_; }
  int CellX(double x) const;
  int CellZ(double z) const;
  // Occupancy of the cell containing (x, z); out-of-grid points report `outside`.
  bool Query(double x, double z, bool outside = true) const;

  // Marks every cell whose center lies inside the rectangle.
  void FillRect(const Rect& r);
  std::size_t Count() const;
  bool Empty() const { return Count() == 0; }
  bool SameLayout(const OccupancyGrid2D& o) const;

  OccupancyGrid2D Complement() const;
  // Same layout, every cell clear.
  OccupancyGrid2D Blank() const;
  OccupancyGrid2D Union(const OccupancyGrid2D& o) const;
  OccupancyGrid2D Intersection(const OccupancyGrid2D& o) const;

  bool operator==(const OccupancyGrid2D& o) const {
    return SameLayout(o) && cells_ == o.cells_;
  }

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  // Text raster: header line with the box and resolution, then 0/1 rows
  // from the top (largest z) down.
  void WriteText(std::ostream& out) const;

 private:
  double x_min_ = 0.0, z_min_ = 0.0, res_ = 1.0;
  int nx_ = 0, nz_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Squared Euclidean distance, in cells, from every cell to the nearest set
// cell (exact, separable transform). Empty input yields +inf everywhere.
std::vector<double> SquaredDistanceField(const OccupancyGrid2D& grid);

// Dilation and erosion by the disk {(i, j) : (i^2 + j^2) res^2 <= radius^2}.
// Erosion treats everything outside the grid as empty.
OccupancyGrid2D DilateDisk(const OccupancyGrid2D& grid, double radius);
OccupancyGrid2D ErodeDisk(const OccupancyGrid2D& grid, double radius);

// Distance fields of one grid kept around so repeated dilations/erosions at
// different radii cost one threshold pass each.
class DiskMorphology {
 public:
  explicit DiskMorphology(const OccupancyGrid2D& grid);
  OccupancyGrid2D Dilate(double radius) const;
  OccupancyGrid2D Erode(double radius) const;

 private:
  OccupancyGrid2D grid_;
  std::vector<double> to_set_;    // squared cell distance to nearest set cell
  std::vector<double> to_clear_;  // ... to nearest clear cell, outside counts as clear
};

}  // namespace wavetrack
