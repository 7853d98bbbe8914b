#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavetrack/occupancy.hpp"
#include "wavetrack/planner.hpp"

namespace wavetrack {

// One row per control period.
struct TraceRow {
  double t = 0.0;
  double t_c = 0.0;  // time used for value-function queries (mapped in periodic runs)
  Eigen::VectorXd s;
  Eigen::Vector2d ref = Eigen::Vector2d::Zero();
  Eigen::VectorXd u_s;
  Eigen::VectorXd d_nom;
  double value = 0.0;
  double level = 0.0;
};

struct SimEvent {
  double t = 0.0;
  std::string type;  // replan, sense, goal, clamp, infeasible, viability
  nlohmann::json data = nlohmann::json::object();
};

// Everything needed to redraw the workspace at a replan.
struct ReplanRecord {
  int k = 0;
  double t_k = 0.0;
  double t_i = 0.0;
  double t_f = 0.0;
  double level = 0.0;
  Eigen::Vector2d p_k = Eigen::Vector2d::Zero();
  PlannedTrajectory plan;  // in mapped time; add t_k - t_i for wall-clock time
  OccupancyGrid2D known_obstacles;
  OccupancyGrid2D planner_obstacles;  // at t_i
  OccupancyGrid2D planner_goal;       // at t_i
  std::vector<Eigen::Vector2d> path_so_far;
};

struct SimLog {
  nlohmann::json config = nlohmann::json::object();
  std::vector<TraceRow> traces;
  std::vector<SimEvent> events;
  std::vector<ReplanRecord> replans;
  std::string outcome;  // goal, timeout, infeasible
  std::optional<double> goal_time;
  int goals_reached = 0;

  void WriteTraces(std::ostream& out) const;
  void WriteEvents(std::ostream& out) const;
  nlohmann::json Summary() const;
  // SHA-256 over the config echo, traces and events as serialized above.
  std::string ContentHash() const;
  // traces.csv, events.jsonl, config.json, summary.json and one JSON snapshot
  // per replan under snapshots/.
  void WriteAll(const std::filesystem::path& dir) const;

  std::vector<const SimEvent*> EventsOfType(const std::string& type) const;
};

}  // namespace wavetrack
