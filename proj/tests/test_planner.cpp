#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "wavetrack/planner.hpp"

using namespace wavetrack;
using Catch::Approx;

namespace {

constexpr double kRes = 0.06;  // one lattice step per 0.2 s at 0.3 m/s

std::shared_ptr<PlanningConstraintSet> StaticSet(const OccupancyGrid2D& obstacles,
                                                 const OccupancyGrid2D& goal, int steps,
                                                 double t0 = 0.0) {
  auto cs = std::make_shared<PlanningConstraintSet>();
  cs->T_s = 0.2;
  for (int k = 0; k <= steps; ++k) {
    cs->times.push_back(t0 + k * 0.2);
    cs->obstacles.push_back(obstacles);
    cs->goals.push_back(goal);
  }
  return cs;
}

OccupancyGrid2D Layout() { return OccupancyGrid2D(0.0, 0.0, kRes, 30, 30); }

Eigen::Vector2d Center(const OccupancyGrid2D& g, int i, int j) { return {g.CenterX(i), g.CenterZ(j)}; }

PlanRequest Request(const OccupancyGrid2D& obstacles, const OccupancyGrid2D& goal, int steps,
                    const Eigen::Vector2d& p0, const Eigen::Vector2d& p_ref) {
  PlanRequest req;
  req.t_i = 0.0;
  req.t_f = steps * 0.2;
  req.p0 = p0;
  req.constraints = StaticSet(obstacles, goal, steps);
  req.p_ref = p_ref;
  return req;
}

// Exhaustive layered search over the same 9-move lattice: the cheapest path
// that ends on its first goal cell.
double BruteForceGoalCost(const PlanRequest& req) {
  const auto& cs = *req.constraints;
  const OccupancyGrid2D& g = cs.obstacles[0];
  const int n = g.nx() * g.nz();
  const int N = cs.steps();
  const auto cell = [&](const Eigen::Vector2d& p) { return g.CellZ(p.y()) * g.nx() + g.CellX(p.x()); };
  const auto point = [&](int c) { return Center(g, c % g.nx(), c / g.nx()); };
  const auto quad = [&](const Eigen::Vector2d& e, const Eigen::Matrix2d& W) { return e.dot(W * e); };
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  cost[cell(req.p0)] = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= N; ++k) {
    std::vector<double> next(n, std::numeric_limits<double>::infinity());
    for (int c = 0; c < n; ++c) {
      if (!std::isfinite(cost[c])) continue;
      const Eigen::Vector2d p = point(c);
      if (cs.goals[k].Query(p.x(), p.y(), false)) {
        best = std::min(best, cost[c] + quad(p - req.p_ref, req.Q) * req.T_s);
        continue;
      }
      if (k == N) continue;
      for (int db = -1; db <= 1; ++db)
        for (int da = -1; da <= 1; ++da) {
          const Eigen::Vector2d q = p + Eigen::Vector2d(da, db) * kRes;
          if (cs.obstacles[k + 1].Query(q.x(), q.y(), true)) continue;
          const Eigen::Vector2d u = Eigen::Vector2d(da, db) * kRes / req.T_s;
          const double step = (quad(p - req.p_ref, req.Q) + quad(u, req.R)) * req.T_s;
          const int qc = cell(q);
          next[qc] = std::min(next[qc], cost[c] + step);
        }
    }
    cost = next;
  }
  return best;
}

}  // namespace

TEST_CASE("start inside the goal gives a zero-length plan", "[planner]") {
  OccupancyGrid2D goal = Layout().Blank();
  goal.set(5, 5, true);
  const PlanRequest req = Request(Layout(), goal, 10, Center(goal, 5, 5), Center(goal, 5, 5));
  const PlanResult res = plan_over_interval(req);
  REQUIRE(std::holds_alternative<PlannedTrajectory>(res));
  const auto& plan = std::get<PlannedTrajectory>(res);
  CHECK(plan.states.size() == 1);
  CHECK(plan.controls.empty());
  REQUIRE(plan.goal_time);
  CHECK(*plan.goal_time == 0.0);
  CHECK(validate_plan(plan, req).empty());
}

TEST_CASE("free corridor reaches the goal at full speed", "[planner]") {
  OccupancyGrid2D goal = Layout().Blank();
  for (int j = 0; j < 30; ++j) goal.set(20, j, true);
  // 15 cells away at one cell per step.
  const Eigen::Vector2d p0 = Center(goal, 5, 10);
  const PlanRequest req = Request(Layout(), goal, 30, p0, Center(goal, 20, 10));
  const PlannedTrajectory plan = std::get<PlannedTrajectory>(plan_over_interval(req));
  REQUIRE(plan.goal_time);
  CHECK(*plan.goal_time == Approx(std::ceil(0.9 / (0.3 * 0.2) - 1e-9) * 0.2));
  CHECK(plan.states.back().x() == Approx(Center(goal, 20, 10).x()));
  CHECK(validate_plan(plan, req).empty());
  CHECK(plan.cost == Approx(plan_cost(plan, req)));
}

TEST_CASE("enclosed start is infeasible", "[planner]") {
  OccupancyGrid2D obs = Layout().Blank();
  for (int j = 4; j <= 6; ++j)
    for (int i = 4; i <= 6; ++i)
      if (i != 5 || j != 5) obs.set(i, j, true);
  OccupancyGrid2D goal = Layout().Blank();
  goal.set(20, 20, true);
  const PlanRequest req = Request(obs, goal, 40, Center(obs, 5, 5), Center(obs, 20, 20));
  const PlanResult res = plan_over_interval(req);
  REQUIRE(std::holds_alternative<PlanInfeasible>(res));
  // Waiting in place keeps every layer non-empty, so the horizon is what fails.
  CHECK(std::get<PlanInfeasible>(res).blocked_step == 40);

  // The enclosure closes at step 2.
  auto closing = std::make_shared<PlanningConstraintSet>(*req.constraints);
  for (int k = 2; k <= 40; ++k) closing->obstacles[k].set(5, 5, true);
  PlanRequest squeezed = req;
  squeezed.constraints = closing;
  const PlanResult res2 = plan_over_interval(squeezed);
  REQUIRE(std::holds_alternative<PlanInfeasible>(res2));
  CHECK(std::get<PlanInfeasible>(res2).blocked_step == 2);

  OccupancyGrid2D blocked = Layout().Blank();
  blocked.set(5, 5, true);
  const PlanResult res0 = plan_over_interval(Request(blocked, goal, 40, Center(obs, 5, 5), Center(obs, 20, 20)));
  REQUIRE(std::holds_alternative<PlanInfeasible>(res0));
  CHECK(std::get<PlanInfeasible>(res0).blocked_step == 0);
}

TEST_CASE("goal beyond the horizon", "[planner]") {
  OccupancyGrid2D goal = Layout().Blank();
  goal.set(25, 5, true);
  PlanRequest req = Request(Layout(), goal, 10, Center(goal, 5, 5), Center(goal, 25, 5));
  const PlanResult hard = plan_over_interval(req);
  REQUIRE(std::holds_alternative<PlanInfeasible>(hard));
  CHECK(std::get<PlanInfeasible>(hard).blocked_step == 10);

  req.goal_required = false;
  const PlannedTrajectory soft = std::get<PlannedTrajectory>(plan_over_interval(req));
  CHECK_FALSE(soft.goal_time);
  CHECK(soft.states.size() == 11);
  // Heads straight for the reference.
  CHECK(soft.states.back().x() == Approx(Center(goal, 15, 5).x()));
  CHECK(validate_plan(soft, req).empty());
}

TEST_CASE("moving obstacles are respected per timestamp", "[planner]") {
  // A wall with a door that is open only at step 6.
  OccupancyGrid2D goal = Layout().Blank();
  for (int j = 0; j < 30; ++j) goal.set(15, j, true);
  auto cs = std::make_shared<PlanningConstraintSet>();
  cs->T_s = 0.2;
  for (int k = 0; k <= 20; ++k) {
    OccupancyGrid2D obs = Layout().Blank();
    for (int j = 0; j < 30; ++j)
      if (!(k == 6 && j == 10)) obs.set(10, j, true);
    cs->times.push_back(k * 0.2);
    cs->obstacles.push_back(obs);
    cs->goals.push_back(goal);
  }
  PlanRequest req;
  req.t_f = 4.0;
  req.p0 = Center(goal, 5, 10);
  req.constraints = cs;
  req.p_ref = Center(goal, 15, 10);
  const PlannedTrajectory plan = std::get<PlannedTrajectory>(plan_over_interval(req));
  CHECK(validate_plan(plan, req).empty());
  REQUIRE(plan.states.size() > 6);
  CHECK(plan.states[6].x() == Approx(Center(goal, 10, 10).x()));
  CHECK(plan.states[6].y() == Approx(Center(goal, 10, 10).y()));
}

TEST_CASE("search cost matches exhaustive enumeration", "[planner]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    OccupancyGrid2D obs(0.0, 0.0, kRes, 14, 14);
    std::bernoulli_distribution b(0.25);
    for (int j = 0; j < 14; ++j)
      for (int i = 0; i < 14; ++i) obs.set(i, j, b(rng));
    obs.set(1, 1, false);
    OccupancyGrid2D goal = obs.Blank();
    goal.set(11, 12, true);
    goal.set(12, 12, true);
    obs.set(11, 12, false);
    obs.set(12, 12, false);
    PlanRequest req = Request(obs, goal, 24, Center(obs, 1, 1), Center(obs, 12, 12));
    req.Q = Eigen::Matrix2d::Identity() * (0.5 + trial * 0.3);
    req.R = Eigen::Matrix2d::Identity() * 0.05;
    const double oracle = BruteForceGoalCost(req);
    const PlanResult res = plan_over_interval(req);
    if (!std::isfinite(oracle)) {
      CHECK(std::holds_alternative<PlanInfeasible>(res));
      continue;
    }
    REQUIRE(std::holds_alternative<PlannedTrajectory>(res));
    const auto& plan = std::get<PlannedTrajectory>(res);
    CHECK(plan.cost == Approx(oracle).epsilon(1e-9));
    CHECK(validate_plan(plan, req).empty());
  }
}

TEST_CASE("validator reports each violated condition", "[planner]") {
  OccupancyGrid2D obs = Layout().Blank();
  obs.set(8, 5, true);
  OccupancyGrid2D goal = Layout().Blank();
  goal.set(10, 5, true);
  const PlanRequest req = Request(obs, goal, 10, Center(obs, 5, 5), Center(obs, 10, 5));

  PlannedTrajectory fast;
  fast.times = {0.0, 0.2};
  fast.states = {req.p0, req.p0 + Eigen::Vector2d(0.2, 0.0)};
  fast.controls = {Eigen::Vector2d(1.0, 0.0)};
  bool c1 = false;
  for (const auto& v : validate_plan(fast, req)) c1 |= v.condition == "C1";
  CHECK(c1);

  PlannedTrajectory through;
  through.times.push_back(0.0);
  through.states.push_back(req.p0);
  for (int k = 1; k <= 5; ++k) {
    through.controls.push_back(Eigen::Vector2d(0.3, 0.0));
    through.states.push_back(through.states.back() + Eigen::Vector2d(kRes, 0.0));
    through.times.push_back(0.2 * k);
  }
  through.goal_time = 1.0;
  bool c3 = false;
  for (const auto& v : validate_plan(through, req))
    if (v.condition == "C3") {
      c3 = true;
      CHECK(v.step == 3);
    }
  CHECK(c3);

  PlannedTrajectory broken = through;
  broken.states[2].x() += 0.01;
  bool c2 = false;
  for (const auto& v : validate_plan(broken, req)) c2 |= v.condition == "C2";
  CHECK(c2);
}

TEST_CASE("zero-order-hold evaluation and CSV output", "[planner]") {
  PlannedTrajectory t;
  t.times = {1.0, 1.2, 1.4};
  t.states = {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.06, 0.0), Eigen::Vector2d(0.06, 0.06)};
  t.controls = {Eigen::Vector2d(0.3, 0.0), Eigen::Vector2d(0.0, 0.3)};
  CHECK(t.StateAt(1.1).x() == Approx(0.03));
  CHECK(t.StateAt(1.3).y() == Approx(0.03));
  CHECK(t.StateAt(0.0) == t.states.front());
  CHECK(t.StateAt(9.0) == t.states.back());
  CHECK(t.ControlAt(1.25).y() == 0.3);
  CHECK(t.ControlAt(2.0).isZero());
  std::ostringstream out;
  WritePlanCsv(t, out);
  const std::string text = out.str();
  CHECK(text.rfind("t,x_p,z_p,u_x,u_z\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("request validation", "[planner]") {
  OccupancyGrid2D goal = Layout().Blank();
  PlanRequest req = Request(Layout(), goal, 5, Center(goal, 1, 1), Center(goal, 1, 1));
  req.t_f = -1.0;
  CHECK_THROWS(plan_over_interval(req));
  req = Request(Layout(), goal, 5, Center(goal, 1, 1), Center(goal, 1, 1));
  req.p0.x() = std::nan("");
  CHECK_THROWS(plan_over_interval(req));
  req = Request(Layout(), goal, 5, Center(goal, 1, 1), Center(goal, 1, 1));
  req.u_p_box = InputBox::Symmetric(Eigen::Vector2d(0.1, 0.1));
  CHECK_THROWS(plan_over_interval(req));
}
