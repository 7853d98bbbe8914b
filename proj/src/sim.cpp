#include "wavetrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wavetrack/replanner.hpp"

namespace wavetrack {

namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Eigen::VectorXd integrate_step(const AffineField& plant, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& u, const Eigen::VectorXd& d, double t,
                               double dt) {
  if (!(dt > 0)) throw std::invalid_argument("integrate_step: dt must be positive");
  const auto f = [&](double tt, const Eigen::VectorXd& x) { return plant.Evaluate(tt, x, u, d); };
  const Eigen::VectorXd k1 = f(t, s);
  const Eigen::VectorXd k2 = f(t + 0.5 * dt, s + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * dt, s + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(t + dt, s + dt * k3);
  Eigen::VectorXd out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) {
    std::ostringstream msg;
    msg << "integrate_step: state became non-finite at t=" << t;
    throw std::runtime_error(msg.str());
  }
  return out;
}

Eigen::VectorXd sample_disturbance(std::uint64_t seed, double t, int channels, double bound,
                                   double hold) {
  const auto n = static_cast<std::int64_t>(std::floor(t / hold + 1e-9));
  Eigen::VectorXd d(channels);
  for (int c = 0; c < channels; ++c) {
    std::uint64_t h = SplitMix64(seed);
    h = SplitMix64(h ^ static_cast<std::uint64_t>(n));
    h = SplitMix64(h ^ static_cast<std::uint64_t>(c));
    // 53 random bits -> [0, 1).
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    d[c] = bound * (2.0 * u - 1.0);
  }
  return d;
}

ConstraintTimeline initial_timeline(const Scenario& sc) {
  if (!sc.online) throw ConfigError("scenario has no online section");
  const OnlineConfig& on = *sc.online;
  const Region2D& ws = sc.workspace;
  const Rect padded{ws.x_min - on.padding, ws.x_max + on.padding, ws.z_min - on.padding,
                    ws.z_max + on.padding};
  ConstraintTimeline tl;
  tl.grid = OccupancyGrid2D::Covering(padded, on.resolution);
  const double half = 0.5 * on.resolution - 1e-9;
  // Any cell reaching outside the workspace is blocked.
  for (int j = 0; j < tl.grid.nz(); ++j) {
    for (int i = 0; i < tl.grid.nx(); ++i) {
      const double x = tl.grid.CenterX(i), z = tl.grid.CenterZ(j);
      if (x < ws.x_min + half || x > ws.x_max - half || z < ws.z_min + half || z > ws.z_max - half)
        tl.grid.set(i, j, true);
    }
  }
  return tl;
}

bool sense(const Scenario& sc, const Eigen::VectorXd& s, double t, ConstraintTimeline& timeline) {
  const OnlineConfig& on = *sc.online;
  const Rect range{s[0] - on.sensor_range, s[0] + on.sensor_range, s[1] - on.sensor_range,
                   s[1] + on.sensor_range};
  bool changed = false;
  const double half = 0.5 * on.resolution;
  for (int i = 0; i < static_cast<int>(on.obstacles.size()); ++i) {
    if (std::find(timeline.known.begin(), timeline.known.end(), i) != timeline.known.end()) continue;
    const Rect& ob = on.obstacles[i];
    if (!ob.Intersects(range)) continue;
    timeline.known.push_back(i);
    // Every cell touching the obstacle.
    timeline.grid.FillRect({ob.x_min - half, ob.x_max + half, ob.z_min - half, ob.z_max + half});
    changed = true;
  }
  if (changed) timeline.change_times.push_back(t);
  return changed;
}

double grid_epsilon(const ValueFunction& V) { return 2.0 * V.grid.max_spacing(); }

SimLog run(const Scenario& sc, const ValueFunction& V) {
  if (!sc.online) throw ConfigError("scenario has no online section");
  const OnlineConfig& on = *sc.online;
  const auto system = MakeScenarioSystem(sc);
  if (V.grid.dims() != system->relative_dim())
    throw std::invalid_argument("value function does not match the scenario model");
  const AffineField plant = MakeAuvTruthField(sc.auv, sc.wave);

  Eigen::VectorXd s = on.s0;
  ConstraintTimeline timeline = initial_timeline(sc);
  std::vector<SimEvent> sense_events;

  LoopEnvironment env;
  env.measure = [&] { return s; };
  env.sense = [&](double t, const Eigen::VectorXd& state) {
    const std::size_t before = timeline.known.size();
    const bool changed = sense(sc, state, t, timeline);
    for (std::size_t i = before; i < timeline.known.size(); ++i)
      sense_events.push_back({t, "sense", {{"obstacle", timeline.known[i]}}});
    return changed;
  };
  env.known_obstacles = [&]() -> const OccupancyGrid2D& { return timeline.grid; };
  env.advance = [&](double t, const Eigen::VectorXd& u, double dt) {
    const Eigen::VectorXd d =
        sample_disturbance(on.seed, t, 4, sc.bounds.nominal_disturbance, on.disturbance_hold);
    s = integrate_step(plant, s, u, d, t, dt);
    return d;
  };

  LoopConfig cfg;
  cfg.T_run = on.T_run;
  cfg.control_period = on.control_period;
  cfg.T_s = on.T_s;
  cfg.tau = on.tau;
  cfg.replan = on.replan;
  cfg.level = on.level;
  cfg.reinit = on.reinit;
  cfg.goals = on.goals;
  cfg.Q = on.Q;
  cfg.R = on.R;
  cfg.goal_required = on.goal_required;
  cfg.epsilon_grid = grid_epsilon(V);

  SimLog log = on.periodic ? run_periodic(V, *system, cfg, env) : run_timevarying(V, *system, cfg, env);

  // Sense events precede the loop events logged at the same instant.
  std::vector<SimEvent> merged;
  merged.reserve(log.events.size() + sense_events.size());
  std::size_t a = 0;
  for (SimEvent& e : log.events) {
    while (a < sense_events.size() && sense_events[a].t <= e.t) merged.push_back(std::move(sense_events[a++]));
    merged.push_back(std::move(e));
  }
  while (a < sense_events.size()) merged.push_back(std::move(sense_events[a++]));
  log.events = std::move(merged);

  log.config = {{"scenario", sc.source},
                {"seed", on.seed},
                {"model_hash", sc.ModelHash()},
                {"epsilon_grid", cfg.epsilon_grid}};
  return log;
}

}  // namespace wavetrack
