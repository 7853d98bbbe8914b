#pragma once

#include <Eigen/Dense>

#include <array>
#include <numbers>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace wavetrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Axis-aligned box of admissible input values, one interval per channel.
struct InputBox {
  VectorXd lower;
  VectorXd upper;

  InputBox() = default;
  InputBox(VectorXd lo, VectorXd hi);

  // Symmetric box [-bound, bound] on every channel.
  static InputBox Symmetric(const VectorXd& bound);
  static InputBox Empty() { return {}; }

  int size() const { return static_cast<int>(lower.size()); }
  VectorXd center() const { return 0.5 * (lower + upper); }
  VectorXd half_width() const { return 0.5 * (upper - lower); }
  bool contains(const VectorXd& u, double tol = 0.0) const;
  VectorXd clamp(const VectorXd& u) const;

  // Concatenation, used to stack the planner and disturbance boxes.
  static InputBox Stack(const InputBox& a, const InputBox& b);
};

// Control- and disturbance-affine vector field
//   x' = drift(t, x) + B(t, x) u + D(t, x) d.
// Callbacks write into caller-owned buffers so hot loops never allocate.
struct AffineField {
  using DriftFn =
      std::function<void(double t, std::span<const double> x, std::span<double> out)>;
  using ColumnsFn =
      std::function<void(double t, std::span<const double> x, Eigen::Ref<MatrixXd> out)>;

  int state_dim = 0;
  int control_dim = 0;
  int disturbance_dim = 0;
  DriftFn drift;
  ColumnsFn control_columns;      // state_dim x control_dim
  ColumnsFn disturbance_columns;  // state_dim x disturbance_dim
  // True when both column matrices are independent of x (they may still
  // depend on t). The solver then evaluates them once per stage.
  bool columns_state_independent = true;
  bool time_invariant = false;

  VectorXd Drift(double t, const VectorXd& x) const;
  MatrixXd ControlColumns(double t, const VectorXd& x) const;
  MatrixXd DisturbanceColumns(double t, const VectorXd& x) const;
  VectorXd Evaluate(double t, const VectorXd& x, const VectorXd& u,
                    const VectorXd& d) const;
  void Validate(const std::string& name) const;
};

// Relative dynamics g = L f(t, s, u_s, d) - M h(p, u_p), r = L s - M p.
//
// The tracker (u_s) minimises, the planner and disturbance jointly maximise.
// Their inputs are stacked into one "adversary" vector (u_p, d) whose columns
// are [-M B_h, L D_f].
class RelativeSystem {
 public:
  RelativeSystem(MatrixXd L, MatrixXd M, AffineField tracking, AffineField planning,
                 InputBox u_s_box, InputBox u_p_box, InputBox d_box, MatrixXd error_matrix);

  int relative_dim() const { return static_cast<int>(L_.rows()); }
  int tracking_dim() const { return static_cast<int>(L_.cols()); }
  int planning_dim() const { return static_cast<int>(M_.cols()); }
  int tracker_input_dim() const { return u_s_box_.size(); }
  int adversary_input_dim() const { return u_p_box_.size() + d_box_.size(); }

  const MatrixXd& L() const { return L_; }
  const MatrixXd& M() const { return M_; }
  const MatrixXd& C() const { return C_; }
  const AffineField& tracking() const { return tracking_; }
  const AffineField& planning() const { return planning_; }
  const InputBox& u_s_box() const { return u_s_box_; }
  const InputBox& u_p_box() const { return u_p_box_; }
  const InputBox& d_box() const { return d_box_; }
  const InputBox& adversary_box() const { return adversary_box_; }
  bool columns_state_independent() const;
  bool time_invariant() const;

  // Some (s, p) with L s - M p = r (minimum-norm solution).
  void Lift(std::span<const double> r, std::span<double> s, std::span<double> p) const;
  VectorXd RelativeState(const VectorXd& s, const VectorXd& p) const;

  void Drift(double t, std::span<const double> r, std::span<double> out) const;
  VectorXd Drift(double t, const VectorXd& r) const;
  // Columns of the tracker and adversary inputs in the relative space.
  void Columns(double t, std::span<const double> r, Eigen::Ref<MatrixXd> tracker,
               Eigen::Ref<MatrixXd> adversary) const;
  VectorXd Field(double t, const VectorXd& r, const VectorXd& u_s, const VectorXd& u_p,
                 const VectorXd& d) const;
  // Composition reference: L f(t, s, u_s, d) - M h(p, u_p) from the original fields.
  VectorXd ComposedField(double t, const VectorXd& s, const VectorXd& p, const VectorXd& u_s,
                         const VectorXd& u_p, const VectorXd& d) const;

 private:
  MatrixXd L_;
  MatrixXd M_;
  MatrixXd C_;
  AffineField tracking_;
  AffineField planning_;
  InputBox u_s_box_;
  InputBox u_p_box_;
  InputBox d_box_;
  InputBox adversary_box_;
  MatrixXd lift_;  // (n_s + n_p) x n_r
};

struct WaveParams {
  double amplitude = 0.4;         // m
  double frequency = 0.2 * std::numbers::pi;  // rad/s, 10 s period
  double wavenumber = 0.0402;     // rad/m

  double period() const;
  void Validate() const;
};

struct AuvParams {
  double m = 116.0;
  double m_bar = 116.2;
  double X_du = -167.7;
  double Z_dw = -383.0;
  double X_u = 26.9;
  double Z_w = 0.0;
  double X_absuu = 241.3;
  double Z_abswu = 265.6;
  double g = 9.81;

  void Validate() const;
};

// Time-varying, state-independent approximation of the wave field:
// a rotating phasor per channel plus a box of residual uncertainty.
struct Case2WaveEnvelope {
  double A_W = 0.0;  // m/s
  double A_A = 0.0;  // m/s^2
  double phi_W = 0.0;
  double phi_A = 0.0;
  double D_W = 0.0;
  double D_A = 0.0;

  // Nominal (W_x, W_z, A_x, A_z) of the envelope at time t.
  std::array<double, 4> Nominal(double omega, double t) const;
};

struct Case3WaveBounds {
  double D_W = 0.0;
  double D_A = 0.0;
};

// Box Xi in the x-z plane.
struct Region2D {
  double x_min = 0, x_max = 0, z_min = 0, z_max = 0;
  bool Contains(double x, double z) const {
    return x >= x_min && x <= x_max && z >= z_min && z <= z_max;
  }
};

// Input bounds for the AUV game, defaulting to the values used in the wave
// case study.
struct AuvBounds {
  double thrust_max = 1000.0;        // N, per thruster
  double planner_speed_max = 0.3;    // m/s, per axis
  double nominal_disturbance = 0.001;  // per channel
};

std::array<double, 2> wave_velocity(const WaveParams& w, double x, double z, double t);
std::array<double, 2> wave_acceleration(const WaveParams& w, double x, double z, double t);

// Full AUV right-hand side; s = (x, z, u_r, w_r), u_s = (T_A, T_B),
// d_nom = (d_x, d_z, d_u, d_w), d_wave = (W_x, W_z, A_x, A_z).
std::array<double, 4> auv_rhs(const AuvParams& p, const std::array<double, 4>& s,
                              const std::array<double, 2>& u_s,
                              const std::array<double, 4>& d_nom,
                              const std::array<double, 4>& d_wave);

// Single integrator planner p' = u_p in the x-z plane.
AffineField MakeSingleIntegrator(int dim);

// Case 1: the truth model (full spatial wave) in the 6-D relative state
// (x_a, z_a, u_r, w_r, x, z).
RelativeSystem make_case1(const AuvParams& auv, const WaveParams& wave,
                          const AuvBounds& bounds = {});
// Case 2: rotating-phasor wave plus residual box, 4-D relative state.
RelativeSystem make_case2(const AuvParams& auv, const WaveParams& wave,
                          const Case2WaveEnvelope& env, const AuvBounds& bounds = {});
// Case 3: wave treated as a bounded time-invariant disturbance.
RelativeSystem make_case3(const AuvParams& auv, const Case3WaveBounds& bounds3,
                          const AuvBounds& bounds = {});

// Tracking-system field of the truth plant (Case 1 wave evaluated at the state).
AffineField MakeAuvTruthField(const AuvParams& auv, const WaveParams& wave);

struct EnvelopeSampling {
  int nx = 101;
  int nz = 101;
  int nt = 201;
};

Case2WaveEnvelope fit_case2_envelope(const WaveParams& wave, const Region2D& region,
                                     double horizon, const EnvelopeSampling& sampling = {});
Case3WaveBounds fit_case3_bounds(const WaveParams& wave, const Region2D& region, double horizon,
                                 const EnvelopeSampling& sampling = {});

// t mod tau in [0, tau).
double periodic_wrap(double t, double tau);

}  // namespace wavetrack
