#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/occupancy.hpp"
#include "wavetrack/value_function.hpp"

namespace wavetrack {

// Relative-state axes that carry the positional error (rows touched by M),
// with the matching planner coordinate for each.
struct ErrorAxes {
  std::vector<int> axes;         // relative-state indices, at most 2
  std::vector<int> planner_dim;  // planner coordinate feeding each axis
  std::vector<double> sign;      // r_axis = (L s)_axis - sign * p_dim

  static ErrorAxes From(const RelativeSystem& system);
  int size() const { return static_cast<int>(axes.size()); }
};

// Scalar field on the value-grid nodes of the error axes (one or two),
// row-major with the first error axis slowest.
struct ErrorPlane {
  Axis a0, a1;
  int n0 = 1, n1 = 1;
  std::vector<double> values;

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n1 + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n1 + j]; }
  // Bilinear (linear for one axis); outside the nodes clamps and flags.
  ValueQuery At(double e0, double e1) const;
};

// V with every non-error coordinate fixed at r_fixed (interpolated), sampled
// on the error nodes.
ErrorPlane ErrorSlice(const ValueFunction& V, const ErrorAxes& ex, const Eigen::VectorXd& r_fixed,
                      double t);

// min over p of V(L s - M p, t).
double min_value_level(const ValueFunction& V, const RelativeSystem& system,
                       const Eigen::VectorXd& s, double t);

// Exact interpolated membership in the planning sublevel set.
bool in_planning_sublevel(const ValueFunction& V, const RelativeSystem& system,
                          const Eigen::VectorXd& s, const Eigen::VectorXd& p, double t, double c);

// Rasterized {p : V(L s - M p, t) <= c} on `layout` (cell centers tested).
OccupancyGrid2D planning_sublevel_set(const ValueFunction& V, const RelativeSystem& system,
                                      const Eigen::VectorXd& s, double t, double c,
                                      const OccupancyGrid2D& layout);

struct TEB {
  double time = 0.0;
  double level = 0.0;
  std::vector<std::array<double, 2>> shape;  // included error-node coordinates
  double radius = 0.0;  // circumscribed circle of the shape about the origin
  double margin = 0.0;  // half a value-grid cell, covers node-only minimization

  bool empty() const { return shape.empty(); }
  double inflation() const { return radius + margin; }
};

// {e : min over the other nodes of V(e, ., t) <= c} on the value-grid error nodes.
TEB teb_approx(const ValueFunction& V, const ErrorAxes& ex, double t, double c);

// Obstacles dilated, goals eroded, by the TEB bounding ball.
OccupancyGrid2D planner_obstacles_case2(const OccupancyGrid2D& obstacles, const TEB& teb);
OccupancyGrid2D planner_goal_case2(const OccupancyGrid2D& goal, const TEB& teb);

// Per occupied cell, the raw error shape at that (x, z) (6-D value function
// whose last two axes are the tracking position).
OccupancyGrid2D planner_obstacles_case1(const OccupancyGrid2D& obstacles, const ValueFunction& V6,
                                        const ErrorAxes& ex, double t, double c);

// Union over s in B of the planning sublevel sets (position-only B), using
// the node-minimized error field evaluated at planner-cell offsets.
OccupancyGrid2D set_avoidance(const OccupancyGrid2D& B, const ValueFunction& V,
                              const ErrorAxes& ex, double t, double c);
// Complement of the avoidance map of the complement.
OccupancyGrid2D set_satisfaction(const OccupancyGrid2D& B, const ValueFunction& V,
                                 const ErrorAxes& ex, double t, double c);

}  // namespace wavetrack
