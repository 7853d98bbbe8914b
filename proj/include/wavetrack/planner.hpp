#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/occupancy.hpp"

namespace wavetrack {

// Planner obstacles and goals at uniformly spaced timestamps t_k = t0 + k T_s.
struct PlanningConstraintSet {
  double T_s = 0.2;
  std::vector<double> times;
  std::vector<OccupancyGrid2D> obstacles;
  std::vector<OccupancyGrid2D> goals;

  int steps() const { return static_cast<int>(times.size()) - 1; }
  void Validate() const;
};

struct PlanRequest {
  double t_i = 0.0;
  double t_f = 0.0;
  Eigen::Vector2d p0 = Eigen::Vector2d::Zero();
  std::shared_ptr<const PlanningConstraintSet> constraints;
  InputBox u_p_box = InputBox::Symmetric(Eigen::VectorXd::Constant(2, 0.3));
  double T_s = 0.2;
  bool goal_required = true;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R = 0.01 * Eigen::Matrix2d::Identity();
  Eigen::Vector2d p_ref = Eigen::Vector2d::Zero();

  void Validate() const;
};

struct PlannedTrajectory {
  std::vector<double> times;
  std::vector<Eigen::Vector2d> states;
  std::vector<Eigen::Vector2d> controls;  // one fewer than states
  std::optional<double> goal_time;
  double cost = 0.0;

  // Zero-order hold on the controls (linear in position); held at the ends.
  Eigen::Vector2d StateAt(double t) const;
  Eigen::Vector2d ControlAt(double t) const;
  double end_time() const { return times.back(); }
};

struct PlanInfeasible {
  int blocked_step = 0;
  double blocked_time = 0.0;
  std::string reason;
};

using PlanResult = std::variant<PlannedTrajectory, PlanInfeasible>;

PlanResult plan_over_interval(const PlanRequest& req);

struct PlanViolation {
  std::string condition;  // "C1".."C4" or "structure"
  int step = -1;
  std::string detail;
};

std::vector<PlanViolation> validate_plan(const PlannedTrajectory& traj, const PlanRequest& req);

// Objective of a trajectory under the request's weights (running cost per
// step plus terminal state cost).
double plan_cost(const PlannedTrajectory& traj, const PlanRequest& req);

void WritePlanCsv(const PlannedTrajectory& traj, std::ostream& out);

}  // namespace wavetrack
