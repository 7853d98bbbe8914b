#include "wavetrack/hj_solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>
#include <vector>

namespace wavetrack {

int SolverThreads() {
  if (const char* env = std::getenv("WAVETRACK_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(begin, end, worker) over [0, n) in contiguous chunks.
template <typename Fn>
void ParallelFor(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 4096) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e, w] { fn(b, e, w); });
  }
  for (auto& th : pool) th.join();
}

constexpr double kInf = std::numeric_limits<double>::infinity();

double EnoPick(double a, double b) { return std::abs(a) <= std::abs(b) ? a : b; }

class Integrator {
 public:
  explicit Integrator(const HJIProblem& problem)
      : sys_(*problem.system),
        grid_(problem.grid),
        accuracy_(problem.accuracy),
        dims_(grid_.dims()),
        n_(grid_.size()),
        threads_(SolverThreads()),
        fixed_cols_(sys_.columns_state_independent()),
        drift_(n_ * dims_),
        pm_(n_ * dims_),
        pp_(n_ * dims_),
        tracker_(dims_, sys_.tracker_input_dim()),
        adversary_(dims_, sys_.adversary_input_dim()) {
    const InputBox& us = sys_.u_s_box();
    const InputBox& adv = sys_.adversary_box();
    us_c_ = us.center();
    us_h_ = us.half_width();
    adv_c_ = adv.center();
    adv_h_ = adv.half_width();
  }

  // Evaluates the drift (and fixed columns) on every node at time t.
  void SetTime(double t) {
    if (prepared_ && t == t_) return;
    t_ = t;
    std::vector<std::vector<double>> lo(threads_, std::vector<double>(dims_, kInf));
    std::vector<std::vector<double>> hi(threads_, std::vector<double>(dims_, -kInf));
    std::vector<std::vector<double>> colbound(threads_, std::vector<double>(dims_, 0.0));
    if (fixed_cols_) {
      std::vector<double> r0(dims_, 0.0);
      sys_.Columns(t, r0, tracker_, adversary_);
    }
    std::atomic<bool> finite{true};
    ParallelFor(n_, threads_, [&](std::size_t b, std::size_t e, int w) {
      std::vector<double> r(dims_);
      Eigen::MatrixXd tr(dims_, sys_.tracker_input_dim());
      Eigen::MatrixXd ad(dims_, sys_.adversary_input_dim());
      for (std::size_t n = b; n < e; ++n) {
        NodeCoords(n, r.data());
        double* out = &drift_[n * dims_];
        sys_.Drift(t, r, std::span<double>(out, dims_));
        for (int i = 0; i < dims_; ++i) {
          if (!std::isfinite(out[i])) finite = false;
          lo[w][i] = std::min(lo[w][i], out[i]);
          hi[w][i] = std::max(hi[w][i], out[i]);
        }
        if (!fixed_cols_) {
          sys_.Columns(t, r, tr, ad);
          for (int i = 0; i < dims_; ++i)
            colbound[w][i] = std::max(colbound[w][i], ColumnBound(tr, ad, i));
        }
      }
    });
    if (!finite) throw SolverError("non-finite drift on the grid");
    drift_lo_.assign(dims_, kInf);
    drift_hi_.assign(dims_, -kInf);
    col_bound_.assign(dims_, 0.0);
    for (int i = 0; i < dims_; ++i) {
      for (int w = 0; w < threads_; ++w) {
        drift_lo_[i] = std::min(drift_lo_[i], lo[w][i]);
        drift_hi_[i] = std::max(drift_hi_[i], hi[w][i]);
        col_bound_[i] = std::max(col_bound_[i], colbound[w][i]);
      }
    }
    prepared_ = true;
  }

  // One-sided derivatives of V on every node plus the dissipation
  // coefficients; returns sum_i alpha_i / dx_i.
  double Differentiate(const std::vector<double>& V) {
    std::vector<std::vector<double>> lo(threads_, std::vector<double>(dims_, kInf));
    std::vector<std::vector<double>> hi(threads_, std::vector<double>(dims_, -kInf));
    ParallelFor(n_, threads_, [&](std::size_t b, std::size_t e, int w) {
      for (std::size_t n = b; n < e; ++n) {
        double* pm = &pm_[n * dims_];
        double* pp = &pp_[n * dims_];
        OneSided(V, n, pm, pp);
        for (int i = 0; i < dims_; ++i) {
          lo[w][i] = std::min({lo[w][i], pm[i], pp[i]});
          hi[w][i] = std::max({hi[w][i], pm[i], pp[i]});
        }
      }
    });
    Eigen::VectorXd pmin = Eigen::VectorXd::Constant(dims_, kInf);
    Eigen::VectorXd pmax = Eigen::VectorXd::Constant(dims_, -kInf);
    for (int w = 0; w < threads_; ++w) {
      for (int i = 0; i < dims_; ++i) {
        pmin[i] = std::min(pmin[i], lo[w][i]);
        pmax[i] = std::max(pmax[i], hi[w][i]);
      }
    }
    alpha_.assign(dims_, 0.0);
    if (fixed_cols_) {
      // |dH/dp_i| is the i-th component of g under the inputs that are
      // optimal for the gradient. With fixed columns, evaluate the selections
      // at the extreme gradients of the slice.
      for (const Eigen::VectorXd* p : {&pmin, &pmax}) {
        const Eigen::VectorXd in = tracker_ * Select(tracker_, *p, us_c_, us_h_, -1.0) +
                                   adversary_ * Select(adversary_, *p, adv_c_, adv_h_, 1.0);
        for (int i = 0; i < dims_; ++i) {
          alpha_[i] = std::max({alpha_[i], std::abs(drift_hi_[i] + in[i]),
                                std::abs(drift_lo_[i] + in[i])});
        }
      }
    } else {
      for (int i = 0; i < dims_; ++i)
        alpha_[i] = std::max(std::abs(drift_lo_[i]), std::abs(drift_hi_[i])) + col_bound_[i];
    }
    double ratio = 0.0;
    for (int i = 0; i < dims_; ++i) ratio += alpha_[i] / grid_.spacing(i);
    return ratio;
  }

  // out = Lax-Friedrichs numerical Hamiltonian from the last Differentiate().
  void Hamiltonian(std::vector<double>& out) const {
    ParallelFor(n_, threads_, [&](std::size_t b, std::size_t e, int) {
      std::vector<double> r(dims_), p(dims_);
      Eigen::MatrixXd tr = tracker_, ad = adversary_;
      for (std::size_t n = b; n < e; ++n) {
        const double* pm = &pm_[n * dims_];
        const double* pp = &pp_[n * dims_];
        double diss = 0.0;
        for (int i = 0; i < dims_; ++i) {
          p[i] = 0.5 * (pm[i] + pp[i]);
          diss += alpha_[i] * 0.5 * (pp[i] - pm[i]);
        }
        if (!fixed_cols_) {
          NodeCoords(n, r.data());
          sys_.Columns(t_, r, tr, ad);
        }
        out[n] = Affine(&drift_[n * dims_], p.data(), tr, ad) + diss;
      }
    });
  }

 private:
  void NodeCoords(std::size_t n, double* r) const {
    for (int i = 0; i < dims_; ++i) {
      const std::size_t s = grid_.stride(i);
      r[i] = grid_.axis(i).node(static_cast<int>(n / s));
      n %= s;
    }
  }

  static Eigen::VectorXd Select(const Eigen::MatrixXd& cols, const Eigen::VectorXd& p,
                                const Eigen::VectorXd& c, const Eigen::VectorXd& h,
                                double sign) {
    Eigen::VectorXd u(cols.cols());
    for (int j = 0; j < cols.cols(); ++j) {
      const double q = sign * cols.col(j).dot(p);
      u[j] = c[j] + (q > 0 ? h[j] : q < 0 ? -h[j] : 0.0);
    }
    return u;
  }

  double ColumnBound(const Eigen::MatrixXd& tr, const Eigen::MatrixXd& ad, int i) const {
    double b = 0.0;
    for (int j = 0; j < tr.cols(); ++j) b += std::abs(tr(i, j)) * (std::abs(us_c_[j]) + us_h_[j]);
    for (int j = 0; j < ad.cols(); ++j)
      b += std::abs(ad(i, j)) * (std::abs(adv_c_[j]) + adv_h_[j]);
    return b;
  }

  double Affine(const double* drift, const double* p, const Eigen::MatrixXd& tr,
                const Eigen::MatrixXd& ad) const {
    double h = 0.0;
    for (int i = 0; i < dims_; ++i) h += p[i] * drift[i];
    for (int j = 0; j < tr.cols(); ++j) {
      double q = 0.0;
      for (int i = 0; i < dims_; ++i) q += p[i] * tr(i, j);
      h += q * us_c_[j] - std::abs(q) * us_h_[j];
    }
    for (int j = 0; j < ad.cols(); ++j) {
      double q = 0.0;
      for (int i = 0; i < dims_; ++i) q += p[i] * ad(i, j);
      h += q * adv_c_[j] + std::abs(q) * adv_h_[j];
    }
    return h;
  }

  // Left and right one-sided derivatives; at a face the missing side copies
  // the available one.
  void OneSided(const std::vector<double>& V, std::size_t n, double* pm, double* pp) const {
    std::size_t rem = n;
    for (int i = 0; i < dims_; ++i) {
      const std::size_t s = grid_.stride(i);
      const int idx = static_cast<int>(rem / s);
      rem %= s;
      const int cnt = grid_.axis(i).count;
      const double dx = grid_.spacing(i);
      const double v = V[n];
      double m = 0.0, p = 0.0;
      const bool has_m = idx > 0, has_p = idx < cnt - 1;
      if (has_m) m = (v - V[n - s]) / dx;
      if (has_p) p = (V[n + s] - v) / dx;
      if (accuracy_ >= 2) {
        // Second differences at idx-1, idx, idx+1 where available.
        if (has_m && has_p) {
          const double d0 = (V[n + s] - 2.0 * v + V[n - s]) / (dx * dx);
          if (idx > 1) {
            const double dm = (v - 2.0 * V[n - s] + V[n - 2 * s]) / (dx * dx);
            m += 0.5 * dx * EnoPick(dm, d0);
          }
          if (idx < cnt - 2) {
            const double dp = (V[n + 2 * s] - 2.0 * V[n + s] + v) / (dx * dx);
            p -= 0.5 * dx * EnoPick(d0, dp);
          }
        }
      }
      if (!has_m) m = p;
      if (!has_p) p = m;
      pm[i] = m;
      pp[i] = p;
    }
  }

  const RelativeSystem& sys_;
  const Grid& grid_;
  int accuracy_;
  int dims_;
  std::size_t n_;
  int threads_;
  bool fixed_cols_;
  double t_ = 0.0;
  bool prepared_ = false;
  std::vector<double> drift_, pm_, pp_;
  std::vector<double> drift_lo_, drift_hi_, col_bound_;
  Eigen::MatrixXd tracker_;
  Eigen::MatrixXd adversary_;
  Eigen::VectorXd us_c_, us_h_, adv_c_, adv_h_;
  std::vector<double> alpha_;
};

std::vector<float> ToFloat(const std::vector<double>& v) {
  return std::vector<float>(v.begin(), v.end());
}

}  // namespace

void HJIProblem::Validate() const {
  if (!system) throw std::invalid_argument("HJIProblem: missing system");
  if (grid.dims() != system->relative_dim())
    throw std::invalid_argument("HJIProblem: grid dimension != relative state dimension");
  if (!(t_off > 0)) throw std::invalid_argument("HJIProblem: T_off must be positive");
  if (!(cfl > 0 && cfl <= 1)) throw std::invalid_argument("HJIProblem: cfl must be in (0, 1]");
  if (accuracy != 1 && accuracy != 2) throw std::invalid_argument("HJIProblem: accuracy is 1 or 2");
  if (save_interval < 0) throw std::invalid_argument("HJIProblem: negative save interval");
}

ValueFunction solve(const HJIProblem& problem, SolveStats* stats, const SolveProgress& progress) {
  problem.Validate();
  const auto start = std::chrono::steady_clock::now();
  const Grid& grid = problem.grid;
  const RelativeSystem& sys = *problem.system;
  const std::size_t n = grid.size();

  std::vector<double> l(n);
  for (std::size_t k = 0; k < n; ++k) l[k] = error_l(sys.C(), grid.Node(k));

  ValueFunction vf;
  vf.grid = grid;
  vf.l_field = ToFloat(l);
  std::vector<double> times{problem.t_off};
  std::vector<std::vector<float>> slices{vf.l_field};

  // Save instants, descending, ending at 0.
  std::vector<double> marks;
  if (problem.save_interval > 0) {
    const int m = static_cast<int>(std::ceil(problem.t_off / problem.save_interval - 1e-9));
    for (int i = 1; i < m; ++i) marks.push_back(problem.t_off - i * problem.save_interval);
  }
  marks.push_back(0.0);
  std::size_t next_mark = 0;

  Integrator integ(problem);
  std::vector<double> V = l, H1(n), H2(n), V1(n);
  SolveStats st;
  st.min_dt = problem.t_off;
  double t = problem.t_off;
  while (t > 0.0) {
    const double target = marks[next_mark];
    integ.SetTime(t);
    const double ratio1 = integ.Differentiate(V);
    double dt = ratio1 > 0 ? problem.cfl / ratio1 : t - target;
    bool lands = false;
    if (dt >= (t - target) * (1.0 - 1e-12)) {
      dt = t - target;
      lands = true;
    }
    integ.Hamiltonian(H1);
    // Stage two must also satisfy the CFL bound; shrink and redo if not.
    for (;;) {
      for (std::size_t k = 0; k < n; ++k) V1[k] = V[k] + dt * H1[k];
      integ.SetTime(t - dt);
      const double ratio2 = integ.Differentiate(V1);
      if (dt * ratio2 <= 1.0 || ratio2 <= 0) break;
      dt = problem.cfl / ratio2;
      lands = false;
      ++st.cfl_retries;
    }
    integ.Hamiltonian(H2);
    for (std::size_t k = 0; k < n; ++k) {
      const double v2 = V1[k] + dt * H2[k];
      const double next = std::max(0.5 * (V[k] + v2), l[k]);
      if (!std::isfinite(next)) {
        std::ostringstream msg;
        msg << "solver produced a non-finite value at node " << k << ", t = " << t - dt;
        throw SolverError(msg.str());
      }
      V[k] = next;
    }
    t = lands ? target : t - dt;
    ++st.steps;
    st.min_dt = std::min(st.min_dt, dt);
    st.max_dt = std::max(st.max_dt, dt);
    if (problem.save_interval <= 0 || lands) {
      times.push_back(t);
      slices.push_back(ToFloat(V));
    }
    if (lands) ++next_mark;
    if (progress) progress(t);
  }

  std::reverse(times.begin(), times.end());
  std::reverse(slices.begin(), slices.end());
  vf.times = std::move(times);
  vf.slices = std::move(slices);
  st.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (stats) *stats = st;
  return vf;
}

double hamiltonian(const RelativeSystem& system, double t, std::span<const double> r,
                   std::span<const double> p) {
  const int d = system.relative_dim();
  std::vector<double> drift(d);
  system.Drift(t, r, drift);
  Eigen::MatrixXd tr(d, system.tracker_input_dim()), ad(d, system.adversary_input_dim());
  system.Columns(t, r, tr, ad);
  const Eigen::Map<const Eigen::VectorXd> pv(p.data(), d);
  double h = pv.dot(Eigen::Map<const Eigen::VectorXd>(drift.data(), d));
  const Eigen::VectorXd qs = tr.transpose() * pv, qa = ad.transpose() * pv;
  const InputBox& us = system.u_s_box();
  const InputBox& adv = system.adversary_box();
  for (int j = 0; j < qs.size(); ++j)
    h += qs[j] * us.center()[j] - std::abs(qs[j]) * us.half_width()[j];
  for (int j = 0; j < qa.size(); ++j)
    h += qa[j] * adv.center()[j] + std::abs(qa[j]) * adv.half_width()[j];
  return h;
}

namespace {

// Per channel: the box extreme pushing p' b in direction `sign`, center at zero.
Eigen::VectorXd Extremes(const Eigen::VectorXd& q, const InputBox& box, double sign) {
  Eigen::VectorXd u(q.size());
  for (int j = 0; j < q.size(); ++j) {
    const double s = sign * q[j];
    u[j] = s > 0 ? box.upper[j] : s < 0 ? box.lower[j] : 0.5 * (box.lower[j] + box.upper[j]);
  }
  return u;
}

}  // namespace

Eigen::VectorXd optimal_control(const ValueFunction& V, const RelativeSystem& system,
                                const Eigen::VectorXd& r, double t) {
  const Eigen::VectorXd p = V.Gradient(r, t);
  const int d = system.relative_dim();
  Eigen::MatrixXd tr(d, system.tracker_input_dim()), ad(d, system.adversary_input_dim());
  system.Columns(t, std::span<const double>(r.data(), d), tr, ad);
  return Extremes(tr.transpose() * p, system.u_s_box(), -1.0);
}

AdversaryInput worst_adversary(const ValueFunction& V, const RelativeSystem& system,
                               const Eigen::VectorXd& r, double t) {
  const Eigen::VectorXd p = V.Gradient(r, t);
  const int d = system.relative_dim();
  Eigen::MatrixXd tr(d, system.tracker_input_dim()), ad(d, system.adversary_input_dim());
  system.Columns(t, std::span<const double>(r.data(), d), tr, ad);
  const Eigen::VectorXd a = Extremes(ad.transpose() * p, system.adversary_box(), 1.0);
  const int np = system.u_p_box().size();
  return {a.head(np), a.tail(a.size() - np)};
}

}  // namespace wavetrack
