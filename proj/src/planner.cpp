#include "wavetrack/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace wavetrack {

void PlanningConstraintSet::Validate() const {
  if (times.empty()) throw std::invalid_argument("constraint set: no timestamps");
  if (obstacles.size() != times.size() || goals.size() != times.size())
    throw std::invalid_argument("constraint set: per-timestamp grids missing");
  if (!(T_s > 0)) throw std::invalid_argument("constraint set: T_s must be positive");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - T_s) > 1e-9)
      throw std::invalid_argument("constraint set: timestamps not uniformly spaced");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!obstacles[k].SameLayout(obstacles[0]) || !goals[k].SameLayout(obstacles[0]))
      throw std::invalid_argument("constraint set: grid layouts differ");
  }
}

void PlanRequest::Validate() const {
  if (!constraints) throw std::invalid_argument("plan request: missing constraint set");
  constraints->Validate();
  if (t_f < t_i) throw std::invalid_argument("plan request: t_f < t_i");
  if (!(T_s > 0)) throw std::invalid_argument("plan request: T_s must be positive");
  if (std::abs(constraints->T_s - T_s) > 1e-12)
    throw std::invalid_argument("plan request: T_s differs from the constraint set");
  if (std::abs(constraints->times.front() - t_i) > 1e-9)
    throw std::invalid_argument("plan request: constraint set does not start at t_i");
  if (u_p_box.size() != 2) throw std::invalid_argument("plan request: planner box must be 2-D");
  if (!Q.allFinite() || !R.allFinite() || !p0.allFinite() || !p_ref.allFinite())
    throw std::invalid_argument("plan request: non-finite input");
}

Eigen::Vector2d PlannedTrajectory::StateAt(double t) const {
  if (controls.empty() || t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const double T_s = times[1] - times[0];
  std::size_t k = static_cast<std::size_t>(std::floor((t - times.front()) / T_s));
  k = std::min(k, controls.size() - 1);
  return states[k] + (t - times[k]) * controls[k];
}

Eigen::Vector2d PlannedTrajectory::ControlAt(double t) const {
  if (controls.empty() || t < times.front() || t >= times.back()) return Eigen::Vector2d::Zero();
  const double T_s = times[1] - times[0];
  std::size_t k = static_cast<std::size_t>(std::floor((t - times.front()) / T_s));
  return controls[std::min(k, controls.size() - 1)];
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Lattice {
  Eigen::Vector2d p0;
  double res = 0.05;
  int a0 = 0, b0 = 0, na = 0, nb = 0;

  Eigen::Vector2d Point(int ia, int ib) const {
    return {p0.x() + (ia + a0) * res, p0.y() + (ib + b0) * res};
  }
  int Flat(int ia, int ib) const { return ib * na + ia; }
  bool Inside(int ia, int ib) const { return ia >= 0 && ib >= 0 && ia < na && ib < nb; }
};

Lattice MakeLattice(const PlanRequest& req) {
  const OccupancyGrid2D& g = req.constraints->obstacles.front();
  const Rect e = g.extent();
  Lattice L;
  L.p0 = req.p0;
  L.res = g.resolution();
  L.a0 = static_cast<int>(std::floor((e.x_min - req.p0.x()) / L.res));
  L.b0 = static_cast<int>(std::floor((e.z_min - req.p0.y()) / L.res));
  const int a1 = static_cast<int>(std::ceil((e.x_max - req.p0.x()) / L.res));
  const int b1 = static_cast<int>(std::ceil((e.z_max - req.p0.y()) / L.res));
  L.na = a1 - L.a0 + 1;
  L.nb = g.nz() == 1 ? 1 : b1 - L.b0 + 1;
  if (g.nz() == 1) L.b0 = 0;
  return L;
}

struct Move {
  int da, db;
};

double Running(const PlanRequest& req, const Eigen::Vector2d& p, const Eigen::Vector2d& u) {
  const Eigen::Vector2d e = p - req.p_ref;
  return (e.dot(req.Q * e) + u.dot(req.R * u)) * req.T_s;
}

double Terminal(const PlanRequest& req, const Eigen::Vector2d& p) {
  const Eigen::Vector2d e = p - req.p_ref;
  return e.dot(req.Q * e) * req.T_s;
}

// Chebyshev lattice distance to the nearest marked point (8-connected BFS).
std::vector<int> ChebyshevDistance(const Lattice& L, const std::vector<char>& marked) {
  std::vector<int> dist(marked.size(), std::numeric_limits<int>::max());
  std::queue<int> q;
  for (std::size_t i = 0; i < marked.size(); ++i) {
    if (marked[i]) {
      dist[i] = 0;
      q.push(static_cast<int>(i));
    }
  }
  while (!q.empty()) {
    const int cur = q.front();
    q.pop();
    const int ia = cur % L.na, ib = cur / L.na;
    for (int db = -1; db <= 1; ++db) {
      for (int da = -1; da <= 1; ++da) {
        const int na = ia + da, nb = ib + db;
        if (!L.Inside(na, nb)) continue;
        const int n = L.Flat(na, nb);
        if (dist[n] > dist[cur] + 1) {
          dist[n] = dist[cur] + 1;
          q.push(n);
        }
      }
    }
  }
  return dist;
}

PlannedTrajectory BuildTrajectory(const PlanRequest& req, const Lattice& L,
                                  const std::vector<int>& path, bool reached_goal) {
  PlannedTrajectory traj;
  traj.times.push_back(req.t_i);
  traj.states.push_back(req.p0);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int da = path[k] % L.na - path[k - 1] % L.na;
    const int db = path[k] / L.na - path[k - 1] / L.na;
    const Eigen::Vector2d u(da * L.res / req.T_s, db * L.res / req.T_s);
    traj.controls.push_back(u);
    traj.states.push_back(traj.states.back() + req.T_s * u);
    traj.times.push_back(req.t_i + k * req.T_s);
  }
  if (reached_goal) traj.goal_time = traj.times.back();
  traj.cost = plan_cost(traj, req);
  return traj;
}

}  // namespace

PlanResult plan_over_interval(const PlanRequest& req) {
  req.Validate();
  const PlanningConstraintSet& cs = *req.constraints;
  const int N = std::min(cs.steps(), static_cast<int>(std::floor((req.t_f - req.t_i) / req.T_s + 1e-9)));
  const Lattice L = MakeLattice(req);
  const int cells = L.na * L.nb;

  std::vector<Move> moves;
  const auto range = [&](int c, int& lo, int& hi) {
    lo = static_cast<int>(std::ceil(req.u_p_box.lower[c] * req.T_s / L.res - 1e-9));
    hi = static_cast<int>(std::floor(req.u_p_box.upper[c] * req.T_s / L.res + 1e-9));
  };
  int alo, ahi, blo, bhi;
  range(0, alo, ahi);
  range(1, blo, bhi);
  if (L.nb == 1) blo = bhi = 0;
  if (alo > ahi || blo > bhi)
    throw std::invalid_argument("planner: lattice resolution too coarse for the speed bound");
  for (int db = blo; db <= bhi; ++db)
    for (int da = alo; da <= ahi; ++da) moves.push_back({da, db});
  const int K = std::max({std::abs(alo), std::abs(ahi), std::abs(blo), std::abs(bhi)});
  if (K == 0) throw std::invalid_argument("planner: lattice resolution too coarse for the speed bound");

  // Free and goal masks per timestamp.
  std::vector<std::vector<char>> free(N + 1, std::vector<char>(cells)),
      goal(N + 1, std::vector<char>(cells));
  std::vector<char> any_goal(cells, 0);
  for (int k = 0; k <= N; ++k) {
    for (int ib = 0; ib < L.nb; ++ib) {
      for (int ia = 0; ia < L.na; ++ia) {
        const Eigen::Vector2d p = L.Point(ia, ib);
        const int n = L.Flat(ia, ib);
        free[k][n] = !cs.obstacles[k].Query(p.x(), p.y(), true);
        goal[k][n] = cs.goals[k].Query(p.x(), p.y(), false);
        if (goal[k][n]) any_goal[n] = 1;
      }
    }
  }

  const int start = L.Flat(-L.a0, -L.b0);
  if (!L.Inside(-L.a0, -L.b0) || !free[0][start])
    return PlanInfeasible{0, req.t_i, "initial planner state lies in the planner obstacles"};

  // Forward reachability, also used to prune the searches.
  std::vector<std::vector<char>> reach(N + 1, std::vector<char>(cells, 0));
  reach[0][start] = 1;
  bool goal_reachable = goal[0][start];
  for (int k = 0; k < N; ++k) {
    bool any = false;
    for (int n = 0; n < cells; ++n) {
      if (!reach[k][n]) continue;
      const int ia = n % L.na, ib = n / L.na;
      for (const Move& m : moves) {
        const int na = ia + m.da, nb = ib + m.db;
        if (!L.Inside(na, nb)) continue;
        const int q = L.Flat(na, nb);
        if (free[k + 1][q]) {
          reach[k + 1][q] = 1;
          any = true;
          if (goal[k + 1][q]) goal_reachable = true;
        }
      }
    }
    if (!any) {
      std::ostringstream msg;
      msg << "no collision-free planner state at step " << k + 1;
      return PlanInfeasible{k + 1, req.t_i + (k + 1) * req.T_s, msg.str()};
    }
  }

  if (goal_reachable) {
    const double lambda =
        std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(req.Q).eigenvalues().minCoeff());
    const std::vector<int> dgoal = ChebyshevDistance(L, any_goal);
    std::vector<char> ref_mark(cells, 0);
    {
      const int ra = static_cast<int>(std::lround((req.p_ref.x() - req.p0.x()) / L.res)) - L.a0;
      const int rb = L.nb == 1 ? 0
                               : static_cast<int>(std::lround((req.p_ref.y() - req.p0.y()) / L.res)) - L.b0;
      if (L.Inside(ra, rb)) ref_mark[L.Flat(ra, rb)] = 1;
    }
    const bool ref_inside = std::find(ref_mark.begin(), ref_mark.end(), 1) != ref_mark.end();
    const std::vector<int> dref = ref_inside ? ChebyshevDistance(L, ref_mark) : std::vector<int>(cells, 0);

    const auto heuristic = [&](int k, int n, int& steps_needed) {
      steps_needed = (dgoal[n] + K - 1) / K;
      if (goal[k][n]) return Terminal(req, L.Point(n % L.na, n / L.na));
      double h = 0.0;
      for (int j = 0; j < steps_needed; ++j) {
        const double d = std::max(0, dref[n] - 1 - j * K) * L.res;
        h += lambda * d * d * req.T_s;
      }
      return h;
    };

    struct Entry {
      double f;
      int k, ib, ia;
      double g;
      bool operator>(const Entry& o) const {
        if (f != o.f) return f > o.f;
        if (k != o.k) return k > o.k;
        if (ib != o.ib) return ib > o.ib;
        return ia > o.ia;
      }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
    std::vector<double> best(static_cast<std::size_t>(N + 1) * cells, kInf);
    std::vector<int> parent(static_cast<std::size_t>(N + 1) * cells, -1);
    const auto id = [&](int k, int n) { return static_cast<std::size_t>(k) * cells + n; };

    int need = 0;
    best[id(0, start)] = 0.0;
    open.push({heuristic(0, start, need), 0, start / L.na, start % L.na, 0.0});
    while (!open.empty()) {
      const Entry e = open.top();
      open.pop();
      const int n = L.Flat(e.ia, e.ib);
      if (e.g > best[id(e.k, n)]) continue;
      if (goal[e.k][n]) {
        std::vector<int> path(e.k + 1);
        int cur = n;
        for (int k = e.k; k >= 0; --k) {
          path[k] = cur;
          cur = parent[id(k, cur)];
        }
        return BuildTrajectory(req, L, path, true);
      }
      if (e.k == N) continue;
      const Eigen::Vector2d p = L.Point(e.ia, e.ib);
      for (const Move& m : moves) {
        const int na = e.ia + m.da, nb = e.ib + m.db;
        if (!L.Inside(na, nb)) continue;
        const int q = L.Flat(na, nb);
        if (!reach[e.k + 1][q]) continue;
        const Eigen::Vector2d u(m.da * L.res / req.T_s, m.db * L.res / req.T_s);
        const double g = e.g + Running(req, p, u);
        if (g >= best[id(e.k + 1, q)]) continue;
        const double h = heuristic(e.k + 1, q, need);
        if (!goal[e.k + 1][q] && e.k + 1 + need > N) continue;
        best[id(e.k + 1, q)] = g;
        parent[id(e.k + 1, q)] = n;
        open.push({g + h, e.k + 1, nb, na, g});
      }
    }
  }

  if (req.goal_required) {
    return PlanInfeasible{N, req.t_i + N * req.T_s,
                          "goal not reachable within the planning horizon"};
  }

  // Soft goal: minimum-cost collision-free trajectory over the full horizon.
  std::vector<std::vector<double>> cost(N + 1, std::vector<double>(cells, kInf));
  std::vector<std::vector<int>> from(N + 1, std::vector<int>(cells, -1));
  cost[0][start] = 0.0;
  for (int k = 0; k < N; ++k) {
    for (int n = 0; n < cells; ++n) {
      if (cost[k][n] == kInf) continue;
      const int ia = n % L.na, ib = n / L.na;
      const Eigen::Vector2d p = L.Point(ia, ib);
      for (const Move& m : moves) {
        const int na = ia + m.da, nb = ib + m.db;
        if (!L.Inside(na, nb)) continue;
        const int q = L.Flat(na, nb);
        if (!reach[k + 1][q]) continue;
        const Eigen::Vector2d u(m.da * L.res / req.T_s, m.db * L.res / req.T_s);
        const double c = cost[k][n] + Running(req, p, u);
        if (c < cost[k + 1][q]) {
          cost[k + 1][q] = c;
          from[k + 1][q] = n;
        }
      }
    }
  }
  int best_n = -1;
  double best_c = kInf;
  for (int n = 0; n < cells; ++n) {
    if (cost[N][n] == kInf) continue;
    const double c = cost[N][n] + Terminal(req, L.Point(n % L.na, n / L.na));
    if (c < best_c) {
      best_c = c;
      best_n = n;
    }
  }
  std::vector<int> path(N + 1);
  for (int k = N, cur = best_n; k >= 0; --k) {
    path[k] = cur;
    cur = from[k][cur];
  }
  return BuildTrajectory(req, L, path, false);
}

double plan_cost(const PlannedTrajectory& traj, const PlanRequest& req) {
  double c = 0.0;
  for (std::size_t k = 0; k < traj.controls.size(); ++k) c += Running(req, traj.states[k], traj.controls[k]);
  return c + Terminal(req, traj.states.back());
}

std::vector<PlanViolation> validate_plan(const PlannedTrajectory& traj, const PlanRequest& req) {
  std::vector<PlanViolation> out;
  const auto add = [&](const char* cond, int step, const std::string& detail) {
    out.push_back({cond, step, detail});
  };
  if (traj.states.empty() || traj.times.size() != traj.states.size() ||
      traj.controls.size() + 1 != traj.states.size()) {
    add("structure", -1, "inconsistent array lengths");
    return out;
  }
  if (std::abs(traj.times.front() - req.t_i) > 1e-9) add("structure", 0, "does not start at t_i");
  if ((traj.states.front() - req.p0).cwiseAbs().maxCoeff() > 0.0)
    add("structure", 0, "does not start at p0");
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    if (std::abs(traj.times[k] - traj.times[k - 1] - req.T_s) > 1e-9)
      add("structure", static_cast<int>(k), "non-uniform timestamps");
  }
  if (traj.times.back() > req.t_f + 1e-9) add("structure", -1, "extends past t_f");

  for (std::size_t k = 0; k < traj.controls.size(); ++k) {
    if (!req.u_p_box.contains(traj.controls[k], 1e-12))
      add("C1", static_cast<int>(k), "control outside the planner input box");
    const Eigen::Vector2d next = traj.states[k] + req.T_s * traj.controls[k];
    if ((next - traj.states[k + 1]).cwiseAbs().maxCoeff() > 1e-12)
      add("C2", static_cast<int>(k), "state does not follow the discretized dynamics");
  }
  const PlanningConstraintSet* cs = req.constraints.get();
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (!cs || k >= cs->obstacles.size()) {
      add("C3", static_cast<int>(k), "no constraint grid for this step");
      continue;
    }
    const Eigen::Vector2d& p = traj.states[k];
    if (cs->obstacles[k].Query(p.x(), p.y(), true))
      add("C3", static_cast<int>(k), "state inside the planner obstacles");
  }
  if (req.goal_required) {
    const int last = static_cast<int>(traj.states.size()) - 1;
    if (!traj.goal_time) {
      add("C4", last, "goal not reached");
    } else if (cs && last < static_cast<int>(cs->goals.size())) {
      const Eigen::Vector2d& p = traj.states.back();
      if (!cs->goals[last].Query(p.x(), p.y(), false)) add("C4", last, "final state outside goal");
    }
  }
  return out;
}

void WritePlanCsv(const PlannedTrajectory& traj, std::ostream& out) {
  out << "t,x_p,z_p,u_x,u_z\n";
  out.precision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Eigen::Vector2d u = k < traj.controls.size() ? traj.controls[k] : Eigen::Vector2d::Zero();
    out << traj.times[k] << ',' << traj.states[k].x() << ',' << traj.states[k].y() << ','
        << u.x() << ',' << u.y() << '\n';
  }
}

}  // namespace wavetrack
