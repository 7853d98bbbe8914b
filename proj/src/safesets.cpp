#include "wavetrack/safesets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wavetrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckErrorAxes(const ValueFunction& V, const ErrorAxes& ex) {
  if (ex.size() < 1 || ex.size() > 2) throw std::invalid_argument("error axes: need 1 or 2");
  for (int a : ex.axes) {
    if (a < 0 || a >= V.grid.dims()) throw std::invalid_argument("error axes: out of range");
  }
}

// Node-wise minimum of V over every non-error axis, blended in time.
ErrorPlane MinOverOtherNodes(const ValueFunction& V, const ErrorAxes& ex, double t) {
  CheckErrorAxes(V, ex);
  const Grid& g = V.grid;
  ErrorPlane f;
  f.a0 = g.axis(ex.axes[0]);
  f.n0 = f.a0.count;
  if (ex.size() == 2) {
    f.a1 = g.axis(ex.axes[1]);
    f.n1 = f.a1.count;
  }
  f.values.assign(static_cast<std::size_t>(f.n0) * f.n1, kInf);
  int lo, hi;
  double w;
  V.Bracket(t, lo, hi, w);
  const auto& s0 = V.slices[lo];
  const auto& s1 = V.slices[hi];
  const std::size_t st0 = g.stride(ex.axes[0]);
  const std::size_t st1 = ex.size() == 2 ? g.stride(ex.axes[1]) : 1;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const int i0 = static_cast<int>((n / st0) % f.n0);
    const int i1 = ex.size() == 2 ? static_cast<int>((n / st1) % f.n1) : 0;
    const double v = w > 0 ? (1 - w) * s0[n] + w * s1[n] : double(s0[n]);
    double& m = f.values[static_cast<std::size_t>(i0) * f.n1 + i1];
    m = std::min(m, v);
  }
  return f;
}

// Planner-cell offsets (a, b) whose error (a res, b res) lies in the
// sublevel shape of `field`.
std::vector<std::array<int, 2>> OffsetShape(const ErrorPlane& field, double res, double c,
                                            bool two_d) {
  const int ka = static_cast<int>(std::floor(std::max(std::abs(field.a0.min),
                                                      std::abs(field.a0.max)) / res + 1e-9));
  const int kb = two_d ? static_cast<int>(std::floor(
                             std::max(std::abs(field.a1.min), std::abs(field.a1.max)) / res +
                             1e-9))
                       : 0;
  std::vector<std::array<int, 2>> out;
  for (int b = -kb; b <= kb; ++b) {
    for (int a = -ka; a <= ka; ++a) {
      const ValueQuery q = field.At(a * res, b * res);
      if (!q.extrapolated && q.value <= c) out.push_back({a, b});
    }
  }
  return out;
}

// B (+) (-shape): p is marked when p + offset lies in B for some offset.
OccupancyGrid2D ReflectedDilation(const OccupancyGrid2D& B,
                                  const std::vector<std::array<int, 2>>& shape) {
  OccupancyGrid2D out = B.Blank();
  for (int j = 0; j < B.nz(); ++j) {
    for (int i = 0; i < B.nx(); ++i) {
      if (!B.at(i, j)) continue;
      for (const auto& o : shape) {
        const int pi = i - o[0], pj = j - o[1];
        if (out.InBounds(pi, pj)) out.set(pi, pj, true);
      }
    }
  }
  return out;
}

// Planner coordinates of a cell center.
Eigen::VectorXd CellPlannerState(const OccupancyGrid2D& layout, int i, int j, int planning_dim) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(planning_dim);
  p[0] = layout.CenterX(i);
  if (planning_dim > 1) p[1] = layout.CenterZ(j);
  return p;
}

}  // namespace

ValueQuery ErrorPlane::At(double e0, double e1) const {
  ValueQuery q;
  double u0 = (e0 - a0.min) / a0.spacing();
  double u1 = n1 > 1 ? (e1 - a1.min) / a1.spacing() : 0.0;
  const double tol = 1e-9;
  if (u0 < -tol || u0 > n0 - 1 + tol || u1 < -tol || u1 > n1 - 1 + tol) q.extrapolated = true;
  u0 = std::clamp(u0, 0.0, double(n0 - 1));
  u1 = std::clamp(u1, 0.0, double(n1 - 1));
  const int i0 = std::min(static_cast<int>(std::floor(u0)), n0 - 2);
  const double f0 = u0 - i0;
  if (n1 == 1) {
    q.value = (1 - f0) * values[i0] + f0 * values[i0 + 1];
    return q;
  }
  const int i1 = std::min(static_cast<int>(std::floor(u1)), n1 - 2);
  const double f1 = u1 - i1;
  // Zero-weight corners are skipped so on-node queries return stored values.
  double acc = 0.0;
  if ((1 - f0) * (1 - f1) != 0) acc += (1 - f0) * (1 - f1) * at(i0, i1);
  if ((1 - f0) * f1 != 0) acc += (1 - f0) * f1 * at(i0, i1 + 1);
  if (f0 * (1 - f1) != 0) acc += f0 * (1 - f1) * at(i0 + 1, i1);
  if (f0 * f1 != 0) acc += f0 * f1 * at(i0 + 1, i1 + 1);
  q.value = acc;
  return q;
}

ErrorAxes ErrorAxes::From(const RelativeSystem& system) {
  ErrorAxes ex;
  const Eigen::MatrixXd& M = system.M();
  for (int i = 0; i < M.rows(); ++i) {
    int col = -1, nonzero = 0;
    for (int j = 0; j < M.cols(); ++j) {
      if (M(i, j) != 0.0) {
        ++nonzero;
        col = j;
      }
    }
    if (nonzero == 0) continue;
    if (nonzero > 1 || std::abs(M(i, col)) != 1.0)
      throw std::invalid_argument("ErrorAxes: M rows must select single planner coordinates");
    ex.axes.push_back(i);
    ex.planner_dim.push_back(col);
    ex.sign.push_back(M(i, col));
  }
  if (ex.axes.empty() || ex.axes.size() > 2)
    throw std::invalid_argument("ErrorAxes: expected 1 or 2 error axes");
  return ex;
}

ErrorPlane ErrorSlice(const ValueFunction& V, const ErrorAxes& ex, const Eigen::VectorXd& r_fixed,
                      double t) {
  CheckErrorAxes(V, ex);
  ErrorPlane plane;
  plane.a0 = V.grid.axis(ex.axes[0]);
  plane.n0 = plane.a0.count;
  if (ex.size() == 2) {
    plane.a1 = V.grid.axis(ex.axes[1]);
    plane.n1 = plane.a1.count;
  }
  plane.values.resize(static_cast<std::size_t>(plane.n0) * plane.n1);
  Eigen::VectorXd r = r_fixed;
  for (int i = 0; i < plane.n0; ++i) {
    r[ex.axes[0]] = plane.a0.node(i);
    for (int j = 0; j < plane.n1; ++j) {
      if (ex.size() == 2) r[ex.axes[1]] = plane.a1.node(j);
      plane.at(i, j) = V.value_at(r, t).value;
    }
  }
  return plane;
}

double min_value_level(const ValueFunction& V, const RelativeSystem& system,
                       const Eigen::VectorXd& s, double t) {
  const ErrorAxes ex = ErrorAxes::From(system);
  const ErrorPlane plane = ErrorSlice(V, ex, system.L() * s, t);
  return *std::min_element(plane.values.begin(), plane.values.end());
}

bool in_planning_sublevel(const ValueFunction& V, const RelativeSystem& system,
                          const Eigen::VectorXd& s, const Eigen::VectorXd& p, double t, double c) {
  const ValueQuery q = V.value_at(system.RelativeState(s, p), t);
  return !q.extrapolated && q.value <= c;
}

OccupancyGrid2D planning_sublevel_set(const ValueFunction& V, const RelativeSystem& system,
                                      const Eigen::VectorXd& s, double t, double c,
                                      const OccupancyGrid2D& layout) {
  const ErrorAxes ex = ErrorAxes::From(system);
  const Eigen::VectorXd base = system.L() * s;
  // Bilinear interpolation of the error plane equals the full multilinear
  // interpolation because the other coordinates are fixed.
  const ErrorPlane plane = ErrorSlice(V, ex, base, t);
  OccupancyGrid2D out = layout.Blank();
  for (int j = 0; j < layout.nz(); ++j) {
    for (int i = 0; i < layout.nx(); ++i) {
      const Eigen::VectorXd p = CellPlannerState(layout, i, j, system.planning_dim());
      double e[2] = {0.0, 0.0};
      for (int k = 0; k < ex.size(); ++k)
        e[k] = base[ex.axes[k]] - ex.sign[k] * p[ex.planner_dim[k]];
      const ValueQuery q = plane.At(e[0], e[1]);
      out.set(i, j, !q.extrapolated && q.value <= c);
    }
  }
  return out;
}

TEB teb_approx(const ValueFunction& V, const ErrorAxes& ex, double t, double c) {
  const ErrorPlane f = MinOverOtherNodes(V, ex, t);
  TEB teb;
  teb.time = t;
  teb.level = c;
  double spacing = f.a0.spacing();
  if (f.n1 > 1) spacing = std::max(spacing, f.a1.spacing());
  teb.margin = 0.5 * spacing;
  for (int i = 0; i < f.n0; ++i) {
    for (int j = 0; j < f.n1; ++j) {
      if (f.values[static_cast<std::size_t>(i) * f.n1 + j] > c) continue;
      const double e0 = f.a0.node(i), e1 = f.n1 > 1 ? f.a1.node(j) : 0.0;
      teb.shape.push_back({e0, e1});
      teb.radius = std::max(teb.radius, std::hypot(e0, e1));
    }
  }
  return teb;
}

OccupancyGrid2D planner_obstacles_case2(const OccupancyGrid2D& obstacles, const TEB& teb) {
  return DilateDisk(obstacles, teb.inflation());
}

OccupancyGrid2D planner_goal_case2(const OccupancyGrid2D& goal, const TEB& teb) {
  return ErodeDisk(goal, teb.inflation());
}

OccupancyGrid2D planner_obstacles_case1(const OccupancyGrid2D& obstacles, const ValueFunction& V6,
                                        const ErrorAxes& ex, double t, double c) {
  CheckErrorAxes(V6, ex);
  const Grid& g = V6.grid;
  const int dims = g.dims();
  if (dims < 4 || ex.size() != 2) throw std::invalid_argument("case 1 obstacles: need a 6-D V");
  const int ax = dims - 2, az = dims - 1;
  std::vector<int> vel_axes;
  for (int a = 0; a < dims; ++a) {
    if (a != ex.axes[0] && a != ex.axes[1] && a != ax && a != az) vel_axes.push_back(a);
  }
  int lo, hi;
  double w;
  V6.Bracket(t, lo, hi, w);

  ErrorPlane f;
  f.a0 = g.axis(ex.axes[0]);
  f.a1 = g.axis(ex.axes[1]);
  f.n0 = f.a0.count;
  f.n1 = f.a1.count;

  // Velocity-node offsets in the flat index.
  std::vector<std::size_t> vel_offsets{0};
  for (int a : vel_axes) {
    std::vector<std::size_t> next;
    for (std::size_t base : vel_offsets)
      for (int k = 0; k < g.axis(a).count; ++k) next.push_back(base + k * g.stride(a));
    vel_offsets = std::move(next);
  }

  OccupancyGrid2D out = obstacles.Blank();
  for (int j = 0; j < obstacles.nz(); ++j) {
    for (int i = 0; i < obstacles.nx(); ++i) {
      if (!obstacles.at(i, j)) continue;
      // Bilinear weights in the tracking-position axes at this cell.
      double r[8] = {};
      r[ax] = obstacles.CenterX(i);
      r[az] = obstacles.CenterZ(j);
      std::size_t pos_base = 0;
      double fx = 0.0, fz = 0.0;
      {
        const Axis& axx = g.axis(ax);
        const Axis& axz = g.axis(az);
        const double ux = std::clamp((r[ax] - axx.min) / axx.spacing(), 0.0, double(axx.count - 1));
        const double uz = std::clamp((r[az] - axz.min) / axz.spacing(), 0.0, double(axz.count - 1));
        const int ix = std::min(static_cast<int>(std::floor(ux)), axx.count - 2);
        const int iz = std::min(static_cast<int>(std::floor(uz)), axz.count - 2);
        fx = ux - ix;
        fz = uz - iz;
        pos_base = ix * g.stride(ax) + iz * g.stride(az);
      }
      const std::size_t sx = g.stride(ax), sz = g.stride(az);
      f.values.assign(static_cast<std::size_t>(f.n0) * f.n1, kInf);
      for (int e0 = 0; e0 < f.n0; ++e0) {
        for (int e1 = 0; e1 < f.n1; ++e1) {
          const std::size_t eb =
              pos_base + e0 * g.stride(ex.axes[0]) + e1 * g.stride(ex.axes[1]);
          double m = kInf;
          for (std::size_t vo : vel_offsets) {
            const std::size_t n = eb + vo;
            const auto blend = [&](const std::vector<float>& s) {
              return (1 - fx) * (1 - fz) * s[n] + (1 - fx) * fz * s[n + sz] +
                     fx * (1 - fz) * s[n + sx] + fx * fz * s[n + sx + sz];
            };
            double v = blend(V6.slices[lo]);
            if (hi != lo && w > 0) v = (1 - w) * v + w * blend(V6.slices[hi]);
            m = std::min(m, v);
          }
          f.values[static_cast<std::size_t>(e0) * f.n1 + e1] = m;
        }
      }
      for (const auto& o : OffsetShape(f, obstacles.resolution(), c, true)) {
        const int pi = i - o[0], pj = j - o[1];
        if (out.InBounds(pi, pj)) out.set(pi, pj, true);
      }
    }
  }
  return out;
}

OccupancyGrid2D set_avoidance(const OccupancyGrid2D& B, const ValueFunction& V,
                              const ErrorAxes& ex, double t, double c) {
  const ErrorPlane f = MinOverOtherNodes(V, ex, t);
  return ReflectedDilation(B, OffsetShape(f, B.resolution(), c, ex.size() == 2));
}

OccupancyGrid2D set_satisfaction(const OccupancyGrid2D& B, const ValueFunction& V,
                                 const ErrorAxes& ex, double t, double c) {
  return set_avoidance(B.Complement(), V, ex, t, c).Complement();
}

}  // namespace wavetrack
