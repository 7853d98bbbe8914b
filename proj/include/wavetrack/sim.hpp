#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/occupancy.hpp"
#include "wavetrack/scenario.hpp"
#include "wavetrack/simlog.hpp"
#include "wavetrack/value_function.hpp"

namespace wavetrack {

// Classical RK4 with u and d held over the step.
Eigen::VectorXd integrate_step(const AffineField& plant, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& u, const Eigen::VectorXd& d, double t,
                               double dt);

// Uniform on [-bound, bound] per channel, constant on [n hold, (n+1) hold),
// a pure function of (seed, n, channel).
Eigen::VectorXd sample_disturbance(std::uint64_t seed, double t, int channels = 4,
                                   double bound = 0.001, double hold = 0.2);

// Obstacles known so far, rasterized on the planning layout together with
// the workspace complement.
struct ConstraintTimeline {
  std::vector<int> known;  // indices into the true obstacle list, in discovery order
  std::vector<double> change_times;
  OccupancyGrid2D grid;
};

ConstraintTimeline initial_timeline(const Scenario& sc);

// Reveals every true obstacle intersecting the sensor square around the
// tracking position. Returns true iff the known set grew.
bool sense(const Scenario& sc, const Eigen::VectorXd& s, double t, ConstraintTimeline& timeline);

// Closed loop on the full-wave plant; the value function must come from the
// scenario's offline model.
SimLog run(const Scenario& sc, const ValueFunction& V);

// 2 max value-grid spacing: slack for the logged safety trace.
double grid_epsilon(const ValueFunction& V);

}  // namespace wavetrack
