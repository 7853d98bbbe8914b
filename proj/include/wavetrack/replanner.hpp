#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/occupancy.hpp"
#include "wavetrack/planner.hpp"
#include "wavetrack/safesets.hpp"
#include "wavetrack/simlog.hpp"
#include "wavetrack/value_function.hpp"

namespace wavetrack {

// Shift [t_a, t_b] back by whole periods so that it starts in [0, tau).
std::pair<double, double> earliest_equiv_interval(double t_a, double t_b, double tau);

// Half-space on one tracking-state coordinate, e.g. z > 3.6.
struct StateRegion {
  int axis = 1;
  double threshold = 0.0;
  bool above = true;

  bool Contains(const Eigen::VectorXd& s) const {
    return above ? s[axis] > threshold : s[axis] < threshold;
  }
};

struct ReplanPolicy {
  bool on_constraint_change = true;  // always honoured
  std::optional<double> fixed_period;
  std::optional<StateRegion> region_trigger;  // fires once on entry
  std::optional<double> horizon_expiry;       // T', required for periodic runs
  bool on_goal_hit = false;                   // replan when the active goal advances
};

struct LevelPolicy {
  enum class Mode { kFixed, kInitialFloor, kFloor, kRegionSwitch };
  Mode mode = Mode::kInitialFloor;
  double c = 0.0;                    // kFixed
  std::optional<double> c_low;       // kRegionSwitch before entry; unset = initial floor
  double c_high = 0.0;               // kRegionSwitch after entry
  StateRegion region;                // kRegionSwitch
};

struct ReinitPolicy {
  enum class Mode { kContinuePrevious, kTeleportClosestToGoal };
  Mode mode = Mode::kContinuePrevious;
};

// Mutable bookkeeping of the online loop.
struct ReplanState {
  int k = -1;  // replans so far minus one
  double t_k = 0.0;
  Eigen::VectorXd s_k;
  Eigen::Vector2d p_k = Eigen::Vector2d::Zero();
  double c_k = 0.0;
  double t_i = 0.0;
  double t_f = 0.0;
  std::optional<PlannedTrajectory> plan;  // mapped time
  std::optional<double> initial_floor;
  bool region_inside = false;  // trigger edge detection
  bool region_latched = false;  // level switch

  double offset() const { return t_k - t_i; }
};

// Reasons a replan fires at t; empty means no replan.
std::vector<std::string> replan_reasons(const ReplanPolicy& policy, const ReplanState& state,
                                        double t, bool constraint_changed,
                                        const Eigen::VectorXd& s, bool goal_advanced = false);
bool should_replan(const ReplanPolicy& policy, const ReplanState& state, double t,
                   bool constraint_changed, const Eigen::VectorXd& s);

struct LevelChoice {
  double c = 0.0;
  double floor = 0.0;
  double requested = 0.0;
  bool clamped = false;
};

// Updates state.initial_floor / state.region_latched as a side effect.
LevelChoice choose_level(const LevelPolicy& policy, const ValueFunction& V,
                         const RelativeSystem& system, const Eigen::VectorXd& s_k, double t_i,
                         ReplanState& state);

class ReinitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `t_prev` is the previous plan's (mapped) time corresponding to t_k.
Eigen::Vector2d choose_planning_state(const ReinitPolicy& policy, const ValueFunction& V,
                                      const RelativeSystem& system, const Eigen::VectorXd& s_k,
                                      double t_i, double c_k,
                                      const OccupancyGrid2D& planner_obstacles,
                                      const OccupancyGrid2D& planner_goal,
                                      const OccupancyGrid2D& goal,
                                      const PlannedTrajectory* previous, double t_prev);

// Planner obstacles and goals on [t_i, t_i + N T_s] for a state-independent
// TEB model: known obstacles dilated and the goal eroded by the TEB ball at
// each timestamp.
std::shared_ptr<PlanningConstraintSet> build_constraint_set(const ValueFunction& V,
                                                            const ErrorAxes& ex,
                                                            const OccupancyGrid2D& known,
                                                            const OccupancyGrid2D& goal,
                                                            double t_i, int N, double T_s,
                                                            double c);

// The world the loop acts on.
struct LoopEnvironment {
  std::function<Eigen::VectorXd()> measure;
  // Refresh the known constraints; true when they changed.
  std::function<bool(double t, const Eigen::VectorXd& s)> sense;
  // Known obstacles, including the workspace complement, on the planning layout.
  std::function<const OccupancyGrid2D&()> known_obstacles;
  // Apply u_s over [t, t + dt]; returns the disturbance that was applied.
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& u_s, double dt)> advance;
};

struct LoopConfig {
  double T_run = 8.0;
  double control_period = 0.02;
  double T_s = 0.2;
  double tau = 10.0;  // periodic runs only
  ReplanPolicy replan;
  LevelPolicy level;
  ReinitPolicy reinit;
  std::vector<Rect> goals;  // visited in order; reaching the last one ends the run
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R = 0.01 * Eigen::Matrix2d::Identity();
  bool goal_required = true;
  // Tolerance for the logged safety-trace check.
  double epsilon_grid = 0.0;
};

SimLog run_timevarying(const ValueFunction& V, const RelativeSystem& system,
                       const LoopConfig& config, const LoopEnvironment& env);
SimLog run_periodic(const ValueFunction& V, const RelativeSystem& system,
                    const LoopConfig& config, const LoopEnvironment& env);

}  // namespace wavetrack
