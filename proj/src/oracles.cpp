#include "wavetrack/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace wavetrack {

void Analytic1DGame::Validate() const {
  if (a < 0 || b < 0 || e < 0) throw std::invalid_argument("Analytic1DGame: negative speed");
  if (!(t_off > 0)) throw std::invalid_argument("Analytic1DGame: T_off must be positive");
}

double analytic_value(const Analytic1DGame& game, double r, double t) {
  if (game.a >= game.b + game.e) return std::abs(r);
  return std::abs(r) + (game.t_off - t) * (game.b + game.e - game.a);
}

RelativeSystem make_1d_game(const Analytic1DGame& game) {
  game.Validate();
  AffineField tracking;
  tracking.state_dim = 1;
  tracking.control_dim = 1;
  tracking.disturbance_dim = 1;
  tracking.time_invariant = true;
  tracking.drift = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  tracking.control_columns = [](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = 1.0;
  };
  tracking.disturbance_columns = [](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = 1.0;
  };
  const MatrixXd one = MatrixXd::Identity(1, 1);
  return RelativeSystem(one, one, tracking, MakeSingleIntegrator(1),
                        InputBox::Symmetric(VectorXd::Constant(1, game.a)),
                        InputBox::Symmetric(VectorXd::Constant(1, game.b)),
                        InputBox::Symmetric(VectorXd::Constant(1, game.e)), one);
}

namespace {

// All lattice points of a box with `density` samples per channel.
std::vector<VectorXd> Lattice(const InputBox& box, int density) {
  std::vector<VectorXd> pts{VectorXd(box.size())};
  for (int c = 0; c < box.size(); ++c) {
    std::vector<VectorXd> next;
    next.reserve(pts.size() * density);
    for (const auto& base : pts) {
      for (int i = 0; i < density; ++i) {
        VectorXd v = base;
        v[c] = box.lower[c] + (box.upper[c] - box.lower[c]) * i / (density - 1);
        next.push_back(v);
      }
    }
    pts = std::move(next);
  }
  return pts;
}

// Extreme of q . v over the lattice. Small lattices are enumerated outright;
// larger ones use the fact that a linear objective over a product set splits
// into independent per-channel extremes over the same samples.
double LatticeExtreme(const InputBox& box, const VectorXd& q, int density, bool maximize) {
  if (std::pow(static_cast<double>(density), box.size()) <= 1 << 20) {
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (const auto& v : Lattice(box, density))
      best = maximize ? std::max(best, q.dot(v)) : std::min(best, q.dot(v));
    return best;
  }
  double total = 0.0;
  for (int c = 0; c < box.size(); ++c) {
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (int i = 0; i < density; ++i) {
      const double v = q[c] * (box.lower[c] + (box.upper[c] - box.lower[c]) * i / (density - 1));
      best = maximize ? std::max(best, v) : std::min(best, v);
    }
    total += best;
  }
  return total;
}

}  // namespace

double sampled_hamiltonian(const RelativeSystem& system, double t, std::span<const double> r,
                           std::span<const double> p, int density) {
  if (density < 2) throw std::invalid_argument("sampled_hamiltonian: density must be >= 2");
  const int d = system.relative_dim();
  std::vector<double> drift(d);
  system.Drift(t, r, drift);
  MatrixXd tr(d, system.tracker_input_dim()), ad(d, system.adversary_input_dim());
  system.Columns(t, r, tr, ad);
  const Eigen::Map<const VectorXd> pv(p.data(), d);
  const double base = pv.dot(Eigen::Map<const VectorXd>(drift.data(), d));
  const VectorXd qs = tr.transpose() * pv, qa = ad.transpose() * pv;

  // The adversary's best response does not depend on u_s, so the inner max is
  // computed once.
  const double inner = LatticeExtreme(system.adversary_box(), qa, density, true);
  const double best = LatticeExtreme(system.u_s_box(), qs, density, false);
  return base + best + inner;
}

double envelope_residual(const WaveParams& wave, const Case2WaveEnvelope& env,
                         const Region2D& region, int samples, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uz(region.z_min, region.z_max);
  std::uniform_real_distribution<double> ut(0.0, wave.period());
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double x = ux(rng), z = uz(rng), t = ut(rng);
    const auto W = wave_velocity(wave, x, z, t);
    const auto A = wave_acceleration(wave, x, z, t);
    const auto nom = env.Nominal(wave.frequency, t);
    worst = std::max({worst, std::abs(W[0] - nom[0]) - env.D_W, std::abs(W[1] - nom[1]) - env.D_W,
                      std::abs(A[0] - nom[2]) - env.D_A, std::abs(A[1] - nom[3]) - env.D_A});
  }
  return worst;
}

double case3_residual(const WaveParams& wave, const Case3WaveBounds& bounds,
                      const Region2D& region, int samples, unsigned long long seed) {
  Case2WaveEnvelope env;
  env.D_W = bounds.D_W;
  env.D_A = bounds.D_A;
  return envelope_residual(wave, env, region, samples, seed);
}

}  // namespace wavetrack
