#include "wavetrack/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace wavetrack {

InputBox::InputBox(VectorXd lo, VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw std::invalid_argument("InputBox: size mismatch");
  for (int i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      std::ostringstream msg;
      msg << "InputBox: invalid channel " << i << " [" << lower[i] << ", " << upper[i] << "]";
      throw std::invalid_argument(msg.str());
    }
  }
}

InputBox InputBox::Symmetric(const VectorXd& bound) { return InputBox(-bound, bound); }

bool InputBox::contains(const VectorXd& u, double tol) const {
  if (u.size() != lower.size()) return false;
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] < lower[i] - tol || u[i] > upper[i] + tol) return false;
  }
  return true;
}

VectorXd InputBox::clamp(const VectorXd& u) const { return u.cwiseMax(lower).cwiseMin(upper); }

InputBox InputBox::Stack(const InputBox& a, const InputBox& b) {
  VectorXd lo(a.size() + b.size()), hi(a.size() + b.size());
  lo << a.lower, b.lower;
  hi << a.upper, b.upper;
  return InputBox(lo, hi);
}

VectorXd AffineField::Drift(double t, const VectorXd& x) const {
  VectorXd out(state_dim);
  drift(t, std::span<const double>(x.data(), x.size()), std::span<double>(out.data(), out.size()));
  return out;
}

MatrixXd AffineField::ControlColumns(double t, const VectorXd& x) const {
  MatrixXd out = MatrixXd::Zero(state_dim, control_dim);
  if (control_dim > 0) control_columns(t, std::span<const double>(x.data(), x.size()), out);
  return out;
}

MatrixXd AffineField::DisturbanceColumns(double t, const VectorXd& x) const {
  MatrixXd out = MatrixXd::Zero(state_dim, disturbance_dim);
  if (disturbance_dim > 0) disturbance_columns(t, std::span<const double>(x.data(), x.size()), out);
  return out;
}

VectorXd AffineField::Evaluate(double t, const VectorXd& x, const VectorXd& u,
                               const VectorXd& d) const {
  VectorXd out = Drift(t, x);
  if (control_dim > 0) out += ControlColumns(t, x) * u;
  if (disturbance_dim > 0) out += DisturbanceColumns(t, x) * d;
  return out;
}

void AffineField::Validate(const std::string& name) const {
  if (state_dim <= 0) throw std::invalid_argument(name + ": state dimension must be positive");
  if (!drift) throw std::invalid_argument(name + ": missing drift");
  if (control_dim > 0 && !control_columns)
    throw std::invalid_argument(name + ": missing control columns");
  if (disturbance_dim > 0 && !disturbance_columns)
    throw std::invalid_argument(name + ": missing disturbance columns");
}

RelativeSystem::RelativeSystem(MatrixXd L, MatrixXd M, AffineField tracking,
                               AffineField planning, InputBox u_s_box, InputBox u_p_box,
                               InputBox d_box, MatrixXd error_matrix)
    : L_(std::move(L)),
      M_(std::move(M)),
      C_(std::move(error_matrix)),
      tracking_(std::move(tracking)),
      planning_(std::move(planning)),
      u_s_box_(std::move(u_s_box)),
      u_p_box_(std::move(u_p_box)),
      d_box_(std::move(d_box)) {
  tracking_.Validate("tracking field");
  planning_.Validate("planning field");
  if (L_.rows() != M_.rows()) throw std::invalid_argument("RelativeSystem: L and M row mismatch");
  if (L_.cols() != tracking_.state_dim)
    throw std::invalid_argument("RelativeSystem: L columns != tracking state dim");
  if (M_.cols() != planning_.state_dim)
    throw std::invalid_argument("RelativeSystem: M columns != planning state dim");
  if (C_.cols() != L_.rows()) throw std::invalid_argument("RelativeSystem: C columns != n_r");
  if (u_s_box_.size() != tracking_.control_dim)
    throw std::invalid_argument("RelativeSystem: tracker box size != control dim");
  if (u_p_box_.size() != planning_.control_dim)
    throw std::invalid_argument("RelativeSystem: planner box size != control dim");
  if (d_box_.size() != tracking_.disturbance_dim)
    throw std::invalid_argument("RelativeSystem: disturbance box size != disturbance dim");
  if (planning_.disturbance_dim != 0)
    throw std::invalid_argument("RelativeSystem: planning model takes no disturbance");
  adversary_box_ = InputBox::Stack(u_p_box_, d_box_);

  MatrixXd stacked(L_.rows(), L_.cols() + M_.cols());
  stacked << L_, -M_;
  lift_ = stacked.completeOrthogonalDecomposition().pseudoInverse();
  const MatrixXd check = stacked * lift_;
  if (!check.isApprox(MatrixXd::Identity(L_.rows(), L_.rows()), 1e-9))
    throw std::invalid_argument("RelativeSystem: [L, -M] must have full row rank");
}

bool RelativeSystem::columns_state_independent() const {
  return tracking_.columns_state_independent && planning_.columns_state_independent;
}

bool RelativeSystem::time_invariant() const {
  return tracking_.time_invariant && planning_.time_invariant;
}

void RelativeSystem::Lift(std::span<const double> r, std::span<double> s,
                          std::span<double> p) const {
  const int ns = tracking_dim(), np = planning_dim(), nr = relative_dim();
  for (int i = 0; i < ns + np; ++i) {
    double acc = 0.0;
    for (int j = 0; j < nr; ++j) acc += lift_(i, j) * r[j];
    if (i < ns) {
      s[i] = acc;
    } else {
      p[i - ns] = acc;
    }
  }
}

VectorXd RelativeSystem::RelativeState(const VectorXd& s, const VectorXd& p) const {
  return L_ * s - M_ * p;
}

void RelativeSystem::Drift(double t, std::span<const double> r, std::span<double> out) const {
  const int ns = tracking_dim(), np = planning_dim(), nr = relative_dim();
  // Dimensions are tiny; fixed stack buffers avoid heap traffic in the solver.
  double s[16], p[16], fs[16], hp[16];
  Lift(r, std::span<double>(s, ns), std::span<double>(p, np));
  tracking_.drift(t, std::span<const double>(s, ns), std::span<double>(fs, ns));
  planning_.drift(t, std::span<const double>(p, np), std::span<double>(hp, np));
  for (int i = 0; i < nr; ++i) {
    double acc = 0.0;
    for (int j = 0; j < ns; ++j) acc += L_(i, j) * fs[j];
    for (int j = 0; j < np; ++j) acc -= M_(i, j) * hp[j];
    out[i] = acc;
  }
}

VectorXd RelativeSystem::Drift(double t, const VectorXd& r) const {
  VectorXd out(relative_dim());
  Drift(t, std::span<const double>(r.data(), r.size()), std::span<double>(out.data(), out.size()));
  return out;
}

void RelativeSystem::Columns(double t, std::span<const double> r, Eigen::Ref<MatrixXd> tracker,
                             Eigen::Ref<MatrixXd> adversary) const {
  const int ns = tracking_dim(), np = planning_dim();
  double s[16], p[16];
  Lift(r, std::span<double>(s, ns), std::span<double>(p, np));
  const std::span<const double> sv(s, ns), pv(p, np);

  MatrixXd bs = MatrixXd::Zero(ns, tracking_.control_dim);
  if (tracking_.control_dim > 0) tracking_.control_columns(t, sv, bs);
  tracker = L_ * bs;

  const int nup = planning_.control_dim, nd = tracking_.disturbance_dim;
  if (nup > 0) {
    MatrixXd bp = MatrixXd::Zero(np, nup);
    planning_.control_columns(t, pv, bp);
    adversary.leftCols(nup) = -M_ * bp;
  }
  if (nd > 0) {
    MatrixXd bd = MatrixXd::Zero(ns, nd);
    tracking_.disturbance_columns(t, sv, bd);
    adversary.rightCols(nd) = L_ * bd;
  }
}

VectorXd RelativeSystem::Field(double t, const VectorXd& r, const VectorXd& u_s,
                               const VectorXd& u_p, const VectorXd& d) const {
  MatrixXd tracker(relative_dim(), tracker_input_dim());
  MatrixXd adversary(relative_dim(), adversary_input_dim());
  Columns(t, std::span<const double>(r.data(), r.size()), tracker, adversary);
  VectorXd a(adversary_input_dim());
  a << u_p, d;
  return Drift(t, r) + tracker * u_s + adversary * a;
}

VectorXd RelativeSystem::ComposedField(double t, const VectorXd& s, const VectorXd& p,
                                       const VectorXd& u_s, const VectorXd& u_p,
                                       const VectorXd& d) const {
  const VectorXd none;
  return L_ * tracking_.Evaluate(t, s, u_s, d) - M_ * planning_.Evaluate(t, p, u_p, none);
}

double WaveParams::period() const { return 2.0 * std::numbers::pi / frequency; }

void WaveParams::Validate() const {
  if (!(amplitude > 0 && frequency > 0 && wavenumber > 0))
    throw std::invalid_argument("WaveParams: amplitude, frequency and wavenumber must be > 0");
}

void AuvParams::Validate() const {
  if (!(m - X_du > 0) || !(m - Z_dw > 0))
    throw std::invalid_argument("AuvParams: m - X_du and m - Z_dw must be positive");
}

std::array<double, 4> Case2WaveEnvelope::Nominal(double omega, double t) const {
  return {A_W * std::cos(phi_W - omega * t), -A_W * std::sin(phi_W - omega * t),
          A_A * std::sin(phi_A - omega * t), A_A * std::cos(phi_A - omega * t)};
}

std::array<double, 2> wave_velocity(const WaveParams& w, double x, double z, double t) {
  const double mag = w.amplitude * w.frequency * std::exp(-w.wavenumber * z);
  const double phase = w.wavenumber * x - w.frequency * t;
  return {mag * std::cos(phase), -mag * std::sin(phase)};
}

std::array<double, 2> wave_acceleration(const WaveParams& w, double x, double z, double t) {
  const double mag = w.amplitude * w.frequency * w.frequency * std::exp(-w.wavenumber * z);
  const double phase = w.wavenumber * x - w.frequency * t;
  return {mag * std::sin(phase), mag * std::cos(phase)};
}

std::array<double, 4> auv_rhs(const AuvParams& p, const std::array<double, 4>& s,
                              const std::array<double, 2>& u_s,
                              const std::array<double, 4>& d_nom,
                              const std::array<double, 4>& d_wave) {
  const double u = s[2], w = s[3];
  const double dm = p.m_bar - p.m;
  std::array<double, 4> out;
  out[0] = u + d_wave[0] + d_nom[0];
  out[1] = w + d_wave[1] + d_nom[1];
  out[2] = (dm * d_wave[2] - (p.X_u + p.X_absuu * std::abs(u)) * u + u_s[0]) / (p.m - p.X_du) +
           d_nom[2];
  out[3] = (dm * d_wave[3] - (-p.g * (p.m - p.m_bar)) - (p.Z_w + p.Z_abswu * std::abs(w)) * w +
            u_s[1]) /
               (p.m - p.Z_dw) +
           d_nom[3];
  return out;
}

AffineField MakeSingleIntegrator(int dim) {
  AffineField f;
  f.state_dim = dim;
  f.control_dim = dim;
  f.disturbance_dim = 0;
  f.time_invariant = true;
  f.drift = [](double, std::span<const double>, std::span<double> out) {
    for (double& v : out) v = 0.0;
  };
  f.control_columns = [dim](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    out = MatrixXd::Identity(dim, dim);
  };
  return f;
}

namespace {

// Water-relative velocity dynamics shared by every case, without any wave
// contribution: drag, buoyancy, thrust.
void AuvBaseDrift(const AuvParams& p, std::span<const double> s, std::span<double> out) {
  const double u = s[2], w = s[3];
  out[0] = u;
  out[1] = w;
  out[2] = -(p.X_u + p.X_absuu * std::abs(u)) * u / (p.m - p.X_du);
  out[3] = (p.g * (p.m - p.m_bar) - (p.Z_w + p.Z_abswu * std::abs(w)) * w) / (p.m - p.Z_dw);
}

void AuvThrustColumns(const AuvParams& p, Eigen::Ref<MatrixXd> out) {
  out.setZero();
  out(2, 0) = 1.0 / (p.m - p.X_du);
  out(3, 1) = 1.0 / (p.m - p.Z_dw);
}

// Nominal disturbance (identity on each state) followed by a wave-residual
// block: velocity residual enters positions, acceleration residual enters
// the relative-velocity channels scaled by the displaced-mass difference.
void AuvDisturbanceColumns(const AuvParams& p, bool with_wave_residual,
                           Eigen::Ref<MatrixXd> out) {
  out.setZero();
  for (int i = 0; i < 4; ++i) out(i, i) = 1.0;
  if (with_wave_residual) {
    const double dm = p.m_bar - p.m;
    out(0, 4) = 1.0;
    out(1, 5) = 1.0;
    out(2, 6) = dm / (p.m - p.X_du);
    out(3, 7) = dm / (p.m - p.Z_dw);
  }
}

InputBox ThrustBox(const AuvBounds& b) {
  return InputBox::Symmetric(VectorXd::Constant(2, b.thrust_max));
}

InputBox PlannerBox(const AuvBounds& b) {
  return InputBox::Symmetric(VectorXd::Constant(2, b.planner_speed_max));
}

MatrixXd ErrorSelector(int nr) {
  MatrixXd C = MatrixXd::Zero(2, nr);
  C(0, 0) = 1.0;
  C(1, 1) = 1.0;
  return C;
}

}  // namespace

AffineField MakeAuvTruthField(const AuvParams& auv, const WaveParams& wave) {
  auv.Validate();
  wave.Validate();
  AffineField f;
  f.state_dim = 4;
  f.control_dim = 2;
  f.disturbance_dim = 4;
  f.time_invariant = false;
  f.drift = [auv, wave](double t, std::span<const double> s, std::span<double> out) {
    const auto W = wave_velocity(wave, s[0], s[1], t);
    const auto A = wave_acceleration(wave, s[0], s[1], t);
    const auto rhs = auv_rhs(auv, {s[0], s[1], s[2], s[3]}, {0.0, 0.0}, {0, 0, 0, 0},
                             {W[0], W[1], A[0], A[1]});
    for (int i = 0; i < 4; ++i) out[i] = rhs[i];
  };
  f.control_columns = [auv](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    AuvThrustColumns(auv, out);
  };
  f.disturbance_columns = [auv](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    AuvDisturbanceColumns(auv, false, out);
  };
  return f;
}

RelativeSystem make_case1(const AuvParams& auv, const WaveParams& wave, const AuvBounds& bounds) {
  MatrixXd L = MatrixXd::Zero(6, 4);
  L(0, 0) = 1;
  L(1, 1) = 1;
  L(2, 2) = 1;
  L(3, 3) = 1;
  L(4, 0) = 1;
  L(5, 1) = 1;
  MatrixXd M = MatrixXd::Zero(6, 2);
  M(0, 0) = 1;
  M(1, 1) = 1;
  return RelativeSystem(L, M, MakeAuvTruthField(auv, wave), MakeSingleIntegrator(2),
                        ThrustBox(bounds), PlannerBox(bounds),
                        InputBox::Symmetric(VectorXd::Constant(4, bounds.nominal_disturbance)),
                        ErrorSelector(6));
}

RelativeSystem make_case2(const AuvParams& auv, const WaveParams& wave,
                          const Case2WaveEnvelope& env, const AuvBounds& bounds) {
  auv.Validate();
  wave.Validate();
  if (env.D_W < 0 || env.D_A < 0 || env.A_W < 0 || env.A_A < 0)
    throw std::invalid_argument("make_case2: envelope bounds must be non-negative");
  AffineField f;
  f.state_dim = 4;
  f.control_dim = 2;
  f.disturbance_dim = 8;
  f.time_invariant = false;
  const double omega = wave.frequency;
  f.drift = [auv, env, omega](double t, std::span<const double> s, std::span<double> out) {
    AuvBaseDrift(auv, s, out);
    const auto nominal = env.Nominal(omega, t);
    const double dm = auv.m_bar - auv.m;
    out[0] += nominal[0];
    out[1] += nominal[1];
    out[2] += dm * nominal[2] / (auv.m - auv.X_du);
    out[3] += dm * nominal[3] / (auv.m - auv.Z_dw);
  };
  f.control_columns = [auv](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    AuvThrustColumns(auv, out);
  };
  f.disturbance_columns = [auv](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    AuvDisturbanceColumns(auv, true, out);
  };
  VectorXd dbound(8);
  const double dn = bounds.nominal_disturbance;
  dbound << dn, dn, dn, dn, env.D_W, env.D_W, env.D_A, env.D_A;
  return RelativeSystem(MatrixXd::Identity(4, 4), MatrixXd::Identity(4, 2), std::move(f),
                        MakeSingleIntegrator(2), ThrustBox(bounds), PlannerBox(bounds),
                        InputBox::Symmetric(dbound), ErrorSelector(4));
}

RelativeSystem make_case3(const AuvParams& auv, const Case3WaveBounds& b3,
                          const AuvBounds& bounds) {
  auv.Validate();
  if (b3.D_W < 0 || b3.D_A < 0)
    throw std::invalid_argument("make_case3: bounds must be non-negative");
  AffineField f;
  f.state_dim = 4;
  f.control_dim = 2;
  f.disturbance_dim = 8;
  f.time_invariant = true;
  f.drift = [auv](double, std::span<const double> s, std::span<double> out) {
    AuvBaseDrift(auv, s, out);
  };
  f.control_columns = [auv](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    AuvThrustColumns(auv, out);
  };
  f.disturbance_columns = [auv](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    AuvDisturbanceColumns(auv, true, out);
  };
  VectorXd dbound(8);
  const double dn = bounds.nominal_disturbance;
  dbound << dn, dn, dn, dn, b3.D_W, b3.D_W, b3.D_A, b3.D_A;
  return RelativeSystem(MatrixXd::Identity(4, 4), MatrixXd::Identity(4, 2), std::move(f),
                        MakeSingleIntegrator(2), ThrustBox(bounds), PlannerBox(bounds),
                        InputBox::Symmetric(dbound), ErrorSelector(4));
}

double periodic_wrap(double t, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("periodic_wrap: period must be positive");
  double r = std::fmod(t, tau);
  if (r < 0) r += tau;
  if (r >= tau) r = 0.0;
  return r;
}

}  // namespace wavetrack
