#include "wavetrack/replanner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wavetrack/hj_solver.hpp"

namespace wavetrack {

namespace {

constexpr double kTimeEps = 1e-9;

Eigen::Vector2d TrackerPosition(const RelativeSystem& system, const ErrorAxes& ex,
                                const Eigen::VectorXd& s) {
  const Eigen::VectorXd Ls = system.L() * s;
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  for (int i = 0; i < ex.size(); ++i) pos[ex.planner_dim[i]] = Ls[ex.axes[i]] / ex.sign[i];
  return pos;
}

nlohmann::json ToJson(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Goal cell center closest to the centroid of the goal cells.
Eigen::Vector2d ReferencePoint(const OccupancyGrid2D& eroded, const OccupancyGrid2D& goal) {
  const OccupancyGrid2D& g = eroded.Empty() ? goal : eroded;
  double cx = 0.0, cz = 0.0;
  int count = 0;
  for (int j = 0; j < g.nz(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.at(i, j)) continue;
      cx += g.CenterX(i);
      cz += g.CenterZ(j);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("goal region is empty on the planning grid");
  cx /= count;
  cz /= count;
  Eigen::Vector2d best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.nz(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.at(i, j)) continue;
      const double d = std::hypot(g.CenterX(i) - cx, g.CenterZ(j) - cz);
      if (d < best_d) {
        best_d = d;
        best = {g.CenterX(i), g.CenterZ(j)};
      }
    }
  }
  return best;
}

// Planner state attaining min_value_level (on the value-grid error nodes).
Eigen::Vector2d FloorMinimizer(const ValueFunction& V, const RelativeSystem& system,
                               const Eigen::VectorXd& s_k, double t_i) {
  const ErrorAxes ex = ErrorAxes::From(system);
  const Eigen::VectorXd Ls = system.L() * s_k;
  const ErrorPlane plane = ErrorSlice(V, ex, Ls, t_i);
  int bi = 0, bj = 0;
  for (int i = 0; i < plane.n0; ++i)
    for (int j = 0; j < plane.n1; ++j)
      if (plane.at(i, j) < plane.at(bi, bj)) {
        bi = i;
        bj = j;
      }
  const double e[2] = {plane.a0.node(bi), plane.n1 > 1 ? plane.a1.node(bj) : 0.0};
  Eigen::Vector2d p = TrackerPosition(system, ex, s_k);
  for (int i = 0; i < ex.size(); ++i) p[ex.planner_dim[i]] -= e[i] / ex.sign[i];
  return p;
}

Eigen::Vector2d TeleportTarget(const ValueFunction& V, const RelativeSystem& system,
                               const Eigen::VectorXd& s_k, double t_i, double c_k,
                               const OccupancyGrid2D& planner_obstacles,
                               const OccupancyGrid2D& planner_goal, const OccupancyGrid2D& goal) {
  OccupancyGrid2D candidates = planning_sublevel_set(V, system, s_k, t_i, c_k, planner_obstacles);
  candidates = candidates.Intersection(planner_obstacles.Complement());
  if (candidates.Empty()) {
    // At c_k right at the floor the sublevel set can be thinner than a cell;
    // the planner state attaining the floor is still a valid choice.
    const Eigen::Vector2d p = FloorMinimizer(V, system, s_k, t_i);
    // Interpolation order differs from the slice, hence the rounding slack.
    if (in_planning_sublevel(V, system, s_k, p, t_i, c_k + 1e-9) &&
        !planner_obstacles.Query(p.x(), p.y(), true))
      return p;
    throw ReinitError("no viable reinitialization");
  }
  const OccupancyGrid2D& target = planner_goal.Empty() ? goal : planner_goal;
  const std::vector<double> dist = SquaredDistanceField(target);
  int bi = -1, bj = -1;
  double best = std::numeric_limits<double>::infinity();
  // Row-major scan with strict improvement gives the (z, then x) tie-break.
  for (int j = 0; j < candidates.nz(); ++j) {
    for (int i = 0; i < candidates.nx(); ++i) {
      if (!candidates.at(i, j)) continue;
      const double d = dist[candidates.Index(i, j)];
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  if (bi < 0) throw ReinitError("no viable reinitialization");
  return {candidates.CenterX(bi), candidates.CenterZ(bj)};
}

}  // namespace

std::pair<double, double> earliest_equiv_interval(double t_a, double t_b, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("earliest_equiv_interval: tau must be positive");
  if (t_a < 0 || t_b < t_a) throw std::invalid_argument("earliest_equiv_interval: need 0 <= t_a <= t_b");
  const double shift = std::floor(t_a / tau) * tau;
  return {t_a - shift, t_b - shift};
}

std::vector<std::string> replan_reasons(const ReplanPolicy& policy, const ReplanState& state,
                                        double t, bool constraint_changed,
                                        const Eigen::VectorXd& s, bool goal_advanced) {
  std::vector<std::string> reasons;
  if (state.k < 0) reasons.push_back("initial");
  if (constraint_changed) reasons.push_back("constraint_change");
  if (state.k >= 0) {
    if (policy.fixed_period && t - state.t_k >= *policy.fixed_period - kTimeEps)
      reasons.push_back("period");
    if (policy.horizon_expiry && t - state.t_k >= *policy.horizon_expiry - kTimeEps)
      reasons.push_back("horizon_expiry");
  }
  if (policy.region_trigger && policy.region_trigger->Contains(s) && !state.region_inside)
    reasons.push_back("region");
  if (policy.on_goal_hit && goal_advanced) reasons.push_back("goal_hit");
  return reasons;
}

bool should_replan(const ReplanPolicy& policy, const ReplanState& state, double t,
                   bool constraint_changed, const Eigen::VectorXd& s) {
  return !replan_reasons(policy, state, t, constraint_changed, s).empty();
}

LevelChoice choose_level(const LevelPolicy& policy, const ValueFunction& V,
                         const RelativeSystem& system, const Eigen::VectorXd& s_k, double t_i,
                         ReplanState& state) {
  LevelChoice out;
  out.floor = min_value_level(V, system, s_k, t_i);
  if (!state.initial_floor) state.initial_floor = out.floor;
  switch (policy.mode) {
    case LevelPolicy::Mode::kFixed:
      out.requested = policy.c;
      break;
    case LevelPolicy::Mode::kInitialFloor:
      out.requested = *state.initial_floor;
      break;
    case LevelPolicy::Mode::kFloor:
      out.requested = out.floor;
      break;
    case LevelPolicy::Mode::kRegionSwitch:
      if (policy.region.Contains(s_k)) state.region_latched = true;
      out.requested = state.region_latched ? policy.c_high
                                           : policy.c_low.value_or(*state.initial_floor);
      break;
  }
  out.clamped = out.requested < out.floor;
  out.c = std::max(out.requested, out.floor);
  return out;
}

Eigen::Vector2d choose_planning_state(const ReinitPolicy& policy, const ValueFunction& V,
                                      const RelativeSystem& system, const Eigen::VectorXd& s_k,
                                      double t_i, double c_k,
                                      const OccupancyGrid2D& planner_obstacles,
                                      const OccupancyGrid2D& planner_goal,
                                      const OccupancyGrid2D& goal,
                                      const PlannedTrajectory* previous, double t_prev) {
  if (policy.mode == ReinitPolicy::Mode::kTeleportClosestToGoal)
    return TeleportTarget(V, system, s_k, t_i, c_k, planner_obstacles, planner_goal, goal);
  if (previous) return previous->StateAt(t_prev);
  return TrackerPosition(system, ErrorAxes::From(system), s_k);
}

std::shared_ptr<PlanningConstraintSet> build_constraint_set(const ValueFunction& V,
                                                            const ErrorAxes& ex,
                                                            const OccupancyGrid2D& known,
                                                            const OccupancyGrid2D& goal,
                                                            double t_i, int N, double T_s,
                                                            double c) {
  if (N < 0) throw std::invalid_argument("build_constraint_set: negative horizon");
  auto cs = std::make_shared<PlanningConstraintSet>();
  cs->T_s = T_s;
  const DiskMorphology obstacle_morph(known);
  const DiskMorphology goal_morph(goal);
  for (int k = 0; k <= N; ++k) {
    const double t = std::min(t_i + k * T_s, V.t_off());
    const TEB teb = teb_approx(V, ex, t, c);
    cs->times.push_back(t_i + k * T_s);
    cs->obstacles.push_back(obstacle_morph.Dilate(teb.inflation()));
    cs->goals.push_back(goal_morph.Erode(teb.inflation()));
  }
  return cs;
}

namespace {

SimLog RunLoop(const ValueFunction& V, const RelativeSystem& system, const LoopConfig& cfg,
               const LoopEnvironment& env, bool periodic) {
  if (cfg.goals.empty()) throw std::invalid_argument("online loop: no goals");
  if (!(cfg.control_period > 0) || !(cfg.T_s > 0) || !(cfg.T_run >= 0))
    throw std::invalid_argument("online loop: periods must be positive");
  if (periodic) {
    if (!cfg.replan.horizon_expiry)
      throw std::invalid_argument("periodic loop: planning horizon T' is required");
    if (!(V.t_off() > cfg.tau)) throw std::invalid_argument("periodic loop: need T_off > tau");
    if (*cfg.replan.horizon_expiry > V.t_off() - cfg.tau + kTimeEps)
      throw std::invalid_argument("periodic loop: need T' <= T_off - tau");
  } else if (cfg.T_run > V.t_off() + kTimeEps) {
    throw std::invalid_argument("time-varying loop: need T_run <= T_off");
  }
  const ErrorAxes ex = ErrorAxes::From(system);
  if (ex.size() != 2) throw std::invalid_argument("online loop: planner must be 2-D");

  SimLog log;
  log.outcome = "timeout";
  ReplanState st;
  std::size_t active = 0;
  bool goal_advanced = false;
  std::vector<Eigen::Vector2d> path;
  double t_prev_offset = 0.0;

  const long steps = std::lround(cfg.T_run / cfg.control_period);
  for (long n = 0; n <= steps; ++n) {
    const double t = n * cfg.control_period;
    const Eigen::VectorXd s = env.measure();
    if (!s.allFinite()) {
      std::ostringstream msg;
      msg << "tracking state is not finite at t=" << t;
      throw std::runtime_error(msg.str());
    }
    const Eigen::Vector2d pos = TrackerPosition(system, ex, s);
    path.push_back(pos);

    if (cfg.goals[active].Contains(pos.x(), pos.y())) {
      log.events.push_back({t, "goal", {{"index", active}}});
      ++log.goals_reached;
      if (active + 1 == cfg.goals.size()) {
        log.outcome = "goal";
        log.goal_time = t;
        break;
      }
      ++active;
      goal_advanced = true;
    }
    if (n == steps) break;

    const bool changed = env.sense(t, s);
    const std::vector<std::string> reasons =
        replan_reasons(cfg.replan, st, t, changed, s, goal_advanced);
    if (cfg.replan.region_trigger) st.region_inside = cfg.replan.region_trigger->Contains(s);
    goal_advanced = false;

    if (!reasons.empty()) {
      const std::optional<PlannedTrajectory> previous = st.plan;
      if (st.k >= 0) t_prev_offset = st.offset();
      ++st.k;
      st.t_k = t;
      st.s_k = s;
      if (periodic) {
        std::tie(st.t_i, st.t_f) = earliest_equiv_interval(t, t + *cfg.replan.horizon_expiry, cfg.tau);
        if (st.t_f > V.t_off() + kTimeEps)
          throw std::logic_error("periodic loop: mapped interval leaves the offline horizon");
      } else {
        st.t_i = t;
        st.t_f = cfg.T_run;
      }
      const int N = static_cast<int>(std::floor((st.t_f - st.t_i) / cfg.T_s + kTimeEps));

      const LevelChoice level = choose_level(cfg.level, V, system, s, st.t_i, st);
      st.c_k = level.c;
      if (level.clamped) {
        log.events.push_back(
            {t, "clamp", {{"requested", level.requested}, {"floor", level.floor}}});
      }

      const OccupancyGrid2D& known = env.known_obstacles();
      OccupancyGrid2D goal = known.Blank();
      // Only cells lying entirely inside the goal.
      const Rect& g = cfg.goals[active];
      const double half = 0.5 * known.resolution();
      goal.FillRect({g.x_min + half, g.x_max - half, g.z_min + half, g.z_max - half});
      const auto cs = build_constraint_set(V, ex, known, goal, st.t_i, N, cfg.T_s, st.c_k);

      nlohmann::json data = {{"k", st.k},
                             {"reasons", reasons},
                             {"t_i", st.t_i},
                             {"t_f", st.t_f},
                             {"level", st.c_k},
                             {"floor", level.floor},
                             {"goal_index", active}};
      try {
        st.p_k = choose_planning_state(cfg.reinit, V, system, s, st.t_i, st.c_k,
                                       cs->obstacles[0], cs->goals[0], goal,
                                       previous ? &*previous : nullptr, t - t_prev_offset);
        bool viable = in_planning_sublevel(V, system, s, st.p_k, st.t_i, st.c_k) &&
                      !cs->obstacles[0].Query(st.p_k.x(), st.p_k.y(), true);
        if (!viable && cfg.reinit.mode == ReinitPolicy::Mode::kContinuePrevious) {
          // The carried-over planner state no longer certifies tracking; move it
          // to the closest viable point instead of planning from it.
          ReinitPolicy fallback{ReinitPolicy::Mode::kTeleportClosestToGoal};
          st.p_k = choose_planning_state(fallback, V, system, s, st.t_i, st.c_k,
                                         cs->obstacles[0], cs->goals[0], goal, nullptr, 0.0);
          data["reinit_fallback"] = true;
          viable = in_planning_sublevel(V, system, s, st.p_k, st.t_i, st.c_k);
        }
        if (!viable) {
          log.events.push_back({t, "viability", {{"k", st.k}, {"p_k", ToJson(st.p_k)}}});
        }
      } catch (const ReinitError& e) {
        log.events.push_back({t, "infeasible", {{"k", st.k}, {"reason", e.what()}}});
        log.outcome = "infeasible";
        break;
      }
      data["p_k"] = ToJson(st.p_k);

      PlanRequest req;
      req.t_i = st.t_i;
      req.t_f = st.t_f;
      req.p0 = st.p_k;
      req.constraints = cs;
      req.u_p_box = system.u_p_box();
      req.T_s = cfg.T_s;
      req.goal_required = cfg.goal_required;
      req.Q = cfg.Q;
      req.R = cfg.R;
      req.p_ref = ReferencePoint(cs->goals[0], goal);
      const PlanResult result = plan_over_interval(req);

      ReplanRecord rec;
      rec.k = st.k;
      rec.t_k = t;
      rec.t_i = st.t_i;
      rec.t_f = st.t_f;
      rec.level = st.c_k;
      rec.p_k = st.p_k;
      rec.known_obstacles = known;
      rec.planner_obstacles = cs->obstacles[0];
      rec.planner_goal = cs->goals[0];
      rec.path_so_far = path;

      if (const auto* bad = std::get_if<PlanInfeasible>(&result)) {
        data["blocked_step"] = bad->blocked_step;
        data["reason"] = bad->reason;
        log.events.push_back({t, "infeasible", data});
        log.replans.push_back(std::move(rec));
        log.outcome = "infeasible";
        break;
      }
      st.plan = std::get<PlannedTrajectory>(result);
      data["plan_steps"] = static_cast<int>(st.plan->controls.size());
      data["cost"] = st.plan->cost;
      if (st.plan->goal_time) data["plan_goal_time"] = *st.plan->goal_time + st.offset();
      rec.plan = *st.plan;
      log.events.push_back({t, "replan", data});
      log.replans.push_back(std::move(rec));
    }

    const double t_c = t - st.offset();
    TraceRow row;
    row.t = t;
    row.t_c = t_c;
    row.s = s;
    row.ref = st.plan->StateAt(t_c);
    const Eigen::VectorXd r = system.RelativeState(s, row.ref);
    row.u_s = optimal_control(V, system, r, t_c);
    row.value = V.value_at(r, t_c).value;
    row.level = st.c_k;
    row.d_nom = env.advance(t, row.u_s, cfg.control_period);
    log.traces.push_back(std::move(row));
  }
  return log;
}

}  // namespace

SimLog run_timevarying(const ValueFunction& V, const RelativeSystem& system,
                       const LoopConfig& config, const LoopEnvironment& env) {
  return RunLoop(V, system, config, env, false);
}

SimLog run_periodic(const ValueFunction& V, const RelativeSystem& system,
                    const LoopConfig& config, const LoopEnvironment& env) {
  return RunLoop(V, system, config, env, true);
}

}  // namespace wavetrack
