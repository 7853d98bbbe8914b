#pragma once

#include <Eigen/Dense>

#include <span>

#include "wavetrack/dynamics.hpp"

namespace wavetrack {

// r' = u_s - u_p + d with |u_s| <= a, |u_p| <= b, |d| <= e, l(r) = |r|.
struct Analytic1DGame {
  double a = 2.0;
  double b = 1.0;
  double e = 0.0;
  double t_off = 1.0;

  void Validate() const;
};

double analytic_value(const Analytic1DGame& game, double r, double t);

// Relative system realizing the 1-D game (L = M = C = [1]).
RelativeSystem make_1d_game(const Analytic1DGame& game);

// Exhaustive min over a u_s lattice of max over a (u_p, d) lattice of p' g.
// density is the number of samples per input channel (>= 2, includes corners).
double sampled_hamiltonian(const RelativeSystem& system, double t, std::span<const double> r,
                           std::span<const double> p, int density);

// Largest componentwise distance of the true wave vector outside the fitted
// envelope over uniformly random samples of region x [0, period). <= 0 means
// every sample is contained.
double envelope_residual(const WaveParams& wave, const Case2WaveEnvelope& env,
                         const Region2D& region, int samples, unsigned long long seed = 1);

// Same check for the time-invariant bounds.
double case3_residual(const WaveParams& wave, const Case3WaveBounds& bounds,
                      const Region2D& region, int samples, unsigned long long seed = 1);

// One classical RK4 step of x' = f(t, x).
template <typename F>
Eigen::VectorXd Rk4Step(const F& f, double t, const Eigen::VectorXd& x, double dt) {
  const Eigen::VectorXd k1 = f(t, x);
  const Eigen::VectorXd k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(t + dt, x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace wavetrack
