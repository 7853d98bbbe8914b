#include "catch_amalgamated.hpp"

#include <cmath>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/replanner.hpp"

using namespace wavetrack;
using Catch::Approx;

namespace {

// Planar single integrators: tracker speed 0.5 per axis, planner 0.3.
RelativeSystem Planar() {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  return RelativeSystem(I, I, MakeSingleIntegrator(2), MakeSingleIntegrator(2),
                        InputBox::Symmetric(VectorXd::Constant(2, 0.5)),
                        InputBox::Symmetric(VectorXd::Constant(2, 0.3)), InputBox::Empty(), I);
}

// The dominant tracker keeps V(r, t) = |r| + offset for all t.
ValueFunction NormValue(double offset, double t_off) {
  ValueFunction V;
  V.grid = Grid({{-1.0, 1.0, 41}, {-1.0, 1.0, 41}});
  V.times = {0.0, t_off};
  std::vector<float> s(V.grid.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Eigen::VectorXd x = V.grid.Node(n);
    s[n] = static_cast<float>(std::hypot(x[0], x[1]) + offset);
  }
  V.slices = {s, s};
  V.l_field = s;
  return V;
}

Eigen::VectorXd Vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Obstacle-free world where the tracker integrates its input exactly.
struct OpenWorld {
  Eigen::VectorXd s;
  OccupancyGrid2D known = OccupancyGrid2D::Covering({-0.5, 2.0, -0.5, 2.0}, 0.05);

  explicit OpenWorld(Eigen::VectorXd s0) : s(std::move(s0)) {}

  LoopEnvironment Env() {
    LoopEnvironment env;
    env.measure = [this] { return s; };
    env.sense = [](double, const Eigen::VectorXd&) { return false; };
    env.known_obstacles = [this]() -> const OccupancyGrid2D& { return known; };
    env.advance = [this](double, const Eigen::VectorXd& u, double dt) {
      s += u * dt;
      return Eigen::VectorXd(0);
    };
    return env;
  }
};

LoopConfig BaseConfig() {
  LoopConfig cfg;
  cfg.T_run = 8.0;
  cfg.goals = {{0.9, 1.3, -0.2, 0.3}};
  return cfg;
}

std::vector<const SimEvent*> Replans(const SimLog& log) { return log.EventsOfType("replan"); }

}  // namespace

TEST_CASE("earliest equivalent interval on hand-computed cases", "[replanner][periodic]") {
  struct Case {
    double t_a, t_b, tau, lo, hi;
  };
  const Case cases[] = {
      {23.0, 26.0, 10.0, 3.0, 6.0},    {0.0, 8.0, 10.0, 0.0, 8.0},
      {20.0, 24.0, 10.0, 0.0, 4.0},    {23.0, 27.0, 10.0, 3.0, 7.0},
      {9.5, 13.5, 10.0, 9.5, 13.5},    {10.0, 14.0, 10.0, 0.0, 4.0},
      {35.2, 39.2, 10.0, 5.2, 9.2},    {0.0, 0.0, 10.0, 0.0, 0.0},
      {99.9, 100.0, 10.0, 9.9, 10.0},  {7.0, 7.0, 10.0, 7.0, 7.0},
      {4.0, 6.0, 2.0, 0.0, 2.0},       {5.0, 6.0, 2.0, 1.0, 2.0},
      {1.5, 3.0, 1.0, 0.5, 2.0},       {12.5, 14.0, 12.5, 0.0, 1.5},
      {30.0, 34.0, 10.0, 0.0, 4.0},    {29.99, 33.99, 10.0, 9.99, 13.99},
      {3.0, 3.5, 0.5, 0.0, 0.5},       {100.0, 104.0, 10.0, 0.0, 4.0},
      {61.0, 65.0, 20.0, 1.0, 5.0},    {0.25, 4.25, 10.0, 0.25, 4.25},
  };
  for (const Case& c : cases) {
    INFO("t_a=" << c.t_a << " t_b=" << c.t_b << " tau=" << c.tau);
    const auto [lo, hi] = earliest_equiv_interval(c.t_a, c.t_b, c.tau);
    CHECK(lo == Approx(c.lo).margin(1e-12));
    CHECK(hi == Approx(c.hi).margin(1e-12));
    CHECK(lo >= 0.0);
    CHECK(lo < c.tau);
  }
  CHECK_THROWS(earliest_equiv_interval(1.0, 2.0, 0.0));
  CHECK_THROWS(earliest_equiv_interval(3.0, 2.0, 10.0));
  CHECK_THROWS(earliest_equiv_interval(-1.0, 2.0, 10.0));
}

TEST_CASE("replan triggers and their reasons", "[replanner]") {
  ReplanPolicy policy;
  ReplanState st;
  const Eigen::VectorXd s = Vec2(0.0, 0.0);
  CHECK(replan_reasons(policy, st, 0.0, false, s) == std::vector<std::string>{"initial"});

  st.k = 0;
  st.t_k = 0.0;
  CHECK_FALSE(should_replan(policy, st, 3.0, false, s));
  CHECK(replan_reasons(policy, st, 3.0, true, s) == std::vector<std::string>{"constraint_change"});

  policy.fixed_period = 1.0;
  CHECK_FALSE(should_replan(policy, st, 0.98, false, s));
  CHECK(replan_reasons(policy, st, 1.0, false, s) == std::vector<std::string>{"period"});

  policy = ReplanPolicy{};
  policy.horizon_expiry = 4.0;
  CHECK_FALSE(should_replan(policy, st, 3.9, false, s));
  CHECK(replan_reasons(policy, st, 4.0, false, s) == std::vector<std::string>{"horizon_expiry"});

  policy = ReplanPolicy{};
  policy.region_trigger = StateRegion{1, 0.5, true};
  const Eigen::VectorXd up = Vec2(0.0, 0.6);
  CHECK(replan_reasons(policy, st, 1.0, false, up) == std::vector<std::string>{"region"});
  st.region_inside = true;
  CHECK_FALSE(should_replan(policy, st, 1.0, false, up));

  policy = ReplanPolicy{};
  policy.on_goal_hit = true;
  CHECK(replan_reasons(policy, st, 1.0, false, s, true) == std::vector<std::string>{"goal_hit"});
  CHECK(replan_reasons(policy, st, 1.0, false, s, false).empty());
}

TEST_CASE("level choice is clamped to the floor", "[replanner][level]") {
  const ValueFunction V = NormValue(0.61, 10.0);
  const RelativeSystem sys = Planar();
  const Eigen::VectorXd s = Vec2(0.0, 0.0);

  ReplanState st;
  LevelPolicy fixed;
  fixed.mode = LevelPolicy::Mode::kFixed;
  fixed.c = 0.3;
  LevelChoice lc = choose_level(fixed, V, sys, s, 0.0, st);
  CHECK(lc.floor == Approx(0.61));
  CHECK(lc.clamped);
  CHECK(lc.requested == 0.3);
  CHECK(lc.c == lc.floor);
  REQUIRE(st.initial_floor);
  CHECK(*st.initial_floor == lc.floor);

  fixed.c = 0.8;
  lc = choose_level(fixed, V, sys, s, 0.0, st);
  CHECK_FALSE(lc.clamped);
  CHECK(lc.c == 0.8);

  LevelPolicy floor;
  floor.mode = LevelPolicy::Mode::kInitialFloor;
  CHECK(choose_level(floor, V, sys, s, 2.0, st).c == Approx(0.61));
}

TEST_CASE("region switch latches the high level", "[replanner][level]") {
  const ValueFunction V = NormValue(0.61, 10.0);
  const RelativeSystem sys = Planar();
  LevelPolicy policy;
  policy.mode = LevelPolicy::Mode::kRegionSwitch;
  policy.c_high = 0.7;
  policy.region = StateRegion{1, 0.5, true};

  ReplanState st;
  CHECK(choose_level(policy, V, sys, Vec2(0.0, 0.0), 0.0, st).c == Approx(0.61));
  CHECK_FALSE(st.region_latched);
  CHECK(choose_level(policy, V, sys, Vec2(0.0, 0.6), 1.0, st).c == 0.7);
  CHECK(st.region_latched);
  CHECK(choose_level(policy, V, sys, Vec2(0.0, 0.0), 2.0, st).c == 0.7);

  policy.c_high = 0.5;
  const LevelChoice lc = choose_level(policy, V, sys, Vec2(0.0, 0.6), 3.0, st);
  CHECK(lc.clamped);
  CHECK(lc.c == Approx(0.61));
}

TEST_CASE("continue previous reinitialization", "[replanner][reinit]") {
  const ValueFunction V = NormValue(0.0, 10.0);
  const RelativeSystem sys = Planar();
  const OccupancyGrid2D layout = OccupancyGrid2D::Covering({-0.5, 2.0, -0.5, 2.0}, 0.05);
  PlannedTrajectory prev;
  prev.times = {0.0, 0.2, 0.4};
  prev.states = {{0.0, 0.0}, {0.06, 0.0}, {0.12, 0.0}};
  prev.controls = {{0.3, 0.0}, {0.3, 0.0}};
  const ReinitPolicy policy{ReinitPolicy::Mode::kContinuePrevious};
  const Eigen::Vector2d p = choose_planning_state(policy, V, sys, Vec2(0.1, 0.0), 0.0, 0.1, layout,
                                                  layout, layout, &prev, 0.3);
  CHECK(p == prev.StateAt(0.3));
  CHECK(p.x() == Approx(0.09));
  const Eigen::Vector2d q = choose_planning_state(policy, V, sys, Vec2(0.1, 0.2), 0.0, 0.1, layout,
                                                  layout, layout, nullptr, 0.0);
  CHECK(q.x() == 0.1);
  CHECK(q.y() == 0.2);
}

TEST_CASE("teleport picks the viable cell closest to the goal", "[replanner][reinit]") {
  const ValueFunction V = NormValue(0.0, 10.0);
  const RelativeSystem sys = Planar();
  const OccupancyGrid2D layout = OccupancyGrid2D::Covering({-0.5, 2.0, -0.5, 2.0}, 0.05);
  OccupancyGrid2D goal = layout.Blank();
  goal.FillRect({1.0, 1.1, 0.0, 0.05});
  const Eigen::VectorXd s = Vec2(0.025, 0.025);
  const ReinitPolicy policy{ReinitPolicy::Mode::kTeleportClosestToGoal};
  const Eigen::Vector2d p =
      choose_planning_state(policy, V, sys, s, 0.0, 0.21, layout.Blank(), goal, goal, nullptr, 0.0);
  CHECK(p.x() == Approx(0.225));
  CHECK(p.y() == Approx(0.025));
  CHECK(in_planning_sublevel(V, sys, s, p, 0.0, 0.21));

  // Obstacles everywhere leave nothing to choose from.
  CHECK_THROWS_AS(choose_planning_state(policy, V, sys, s, 0.0, 0.21, layout.Complement(), goal,
                                        goal, nullptr, 0.0),
                  ReinitError);
}

TEST_CASE("constraint set inflates by the error bound", "[replanner]") {
  const ValueFunction V = NormValue(0.0, 10.0);
  const ErrorAxes ex = ErrorAxes::From(Planar());
  OccupancyGrid2D known = OccupancyGrid2D::Covering({0.0, 2.0, 0.0, 2.0}, 0.05);
  known.FillRect({0.9, 1.1, 0.9, 1.1});
  OccupancyGrid2D goal = known.Blank();
  goal.FillRect({0.2, 0.6, 0.2, 0.6});
  const auto cs = build_constraint_set(V, ex, known, goal, 1.0, 5, 0.2, 0.2);
  REQUIRE(cs->obstacles.size() == 6);
  CHECK(cs->times.back() == Approx(2.0));
  for (std::size_t k = 0; k < cs->obstacles.size(); ++k) {
    CHECK(cs->obstacles[k].Intersection(known) == known);
    CHECK(cs->obstacles[k].Count() > known.Count());
    CHECK(cs->goals[k].Intersection(goal) == cs->goals[k]);
    CHECK(cs->goals[k].Count() < goal.Count());
  }
  CHECK_THROWS(build_constraint_set(V, ex, known, goal, 1.0, -1, 0.2, 0.2));
}

TEST_CASE("start inside the goal needs no replan", "[replanner][loop]") {
  const ValueFunction V = NormValue(0.0, 10.0);
  OpenWorld world(Vec2(1.0, 0.0));
  const SimLog log = run_timevarying(V, Planar(), BaseConfig(), world.Env());
  CHECK(log.outcome == "goal");
  REQUIRE(log.goal_time);
  CHECK(*log.goal_time == 0.0);
  CHECK(Replans(log).empty());
}

TEST_CASE("open world replans exactly once", "[replanner][loop]") {
  const ValueFunction V = NormValue(0.0, 10.0);
  OpenWorld world(Vec2(0.025, 0.025));
  const SimLog log = run_timevarying(V, Planar(), BaseConfig(), world.Env());
  CHECK(log.outcome == "goal");
  const auto replans = Replans(log);
  REQUIRE(replans.size() == 1);
  CHECK(replans[0]->data["reasons"] == nlohmann::json::array({"initial"}));
  for (const TraceRow& row : log.traces) CHECK(row.value <= row.level + 0.1);
}

TEST_CASE("fixed period replans on schedule", "[replanner][loop]") {
  const ValueFunction V = NormValue(0.0, 10.0);
  OpenWorld world(Vec2(0.025, 0.025));
  LoopConfig cfg = BaseConfig();
  cfg.replan.fixed_period = 1.0;
  const SimLog log = run_timevarying(V, Planar(), cfg, world.Env());
  REQUIRE(log.outcome == "goal");
  const auto replans = Replans(log);
  REQUIRE(replans.size() == static_cast<std::size_t>(std::floor(*log.goal_time + 1e-9)) + 1);
  for (std::size_t i = 1; i < replans.size(); ++i) {
    CHECK(replans[i]->t == Approx(static_cast<double>(i)).margin(1e-9));
    CHECK(replans[i]->data["reasons"] == nlohmann::json::array({"period"}));
  }
}

TEST_CASE("periodic loop keeps intervals inside the offline horizon", "[replanner][loop][periodic]") {
  const ValueFunction V = NormValue(0.0, 14.0);
  OpenWorld world(Vec2(0.025, 0.025));
  LoopConfig cfg = BaseConfig();
  cfg.T_run = 30.0;
  cfg.tau = 10.0;
  cfg.replan.horizon_expiry = 4.0;
  cfg.goal_required = false;
  cfg.goals = {{0.9, 1.3, -0.2, 0.3}, {-0.3, 0.1, 1.0, 1.4}, {0.9, 1.3, -0.2, 0.3}};
  const SimLog log = run_periodic(V, Planar(), cfg, world.Env());
  CHECK(log.outcome == "goal");
  CHECK(log.goals_reached == 3);
  const auto replans = Replans(log);
  REQUIRE(replans.size() >= 2);
  for (std::size_t i = 0; i < replans.size(); ++i) {
    const double t_i = replans[i]->data["t_i"];
    const double t_f = replans[i]->data["t_f"];
    CHECK(t_i >= 0.0);
    CHECK(t_i < 10.0);
    CHECK(t_f <= 14.0 + 1e-9);
    CHECK(t_f - t_i == Approx(4.0));
    if (i > 0) CHECK(replans[i]->t - replans[i - 1]->t <= 4.0 + 1e-9);
  }
}

TEST_CASE("loop preconditions", "[replanner][loop]") {
  OpenWorld world(Vec2(0.025, 0.025));
  LoopConfig cfg = BaseConfig();
  cfg.replan.horizon_expiry = 5.0;
  cfg.tau = 10.0;
  // T' must not exceed T_off - tau.
  CHECK_THROWS_AS(run_periodic(NormValue(0.0, 14.0), Planar(), cfg, world.Env()),
                  std::invalid_argument);
  cfg.replan.horizon_expiry.reset();
  CHECK_THROWS_AS(run_periodic(NormValue(0.0, 14.0), Planar(), cfg, world.Env()),
                  std::invalid_argument);
  cfg = BaseConfig();
  cfg.T_run = 12.0;
  CHECK_THROWS_AS(run_timevarying(NormValue(0.0, 10.0), Planar(), cfg, world.Env()),
                  std::invalid_argument);
  cfg.T_run = 8.0;
  cfg.goals.clear();
  CHECK_THROWS_AS(run_timevarying(NormValue(0.0, 10.0), Planar(), cfg, world.Env()),
                  std::invalid_argument);
}
