#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/hj_solver.hpp"
#include "wavetrack/oracles.hpp"

using namespace wavetrack;
using Catch::Approx;

namespace {

WaveParams PaperWave() {
  WaveParams w;
  w.amplitude = 0.4;
  w.frequency = 0.2 * std::numbers::pi;
  w.wavenumber = 0.0402;
  return w;
}

}  // namespace

TEST_CASE("analytic 1-D game values", "[oracles]") {
  CHECK(analytic_value({2.0, 1.0, 0.0, 1.0}, 0.7, 0.3) == Approx(0.7));
  CHECK(analytic_value({1.0, 2.0, 0.0, 3.0}, 0.0, 3.0) == 0.0);
  CHECK(analytic_value({1.0, 2.0, 0.0, 3.0}, 0.5, 2.0) == Approx(1.5));
  // Disturbance adds to the adversary: net rate 1 + 0.5 - 1.
  CHECK(analytic_value({1.0, 1.0, 0.5, 2.0}, -0.2, 0.0) == Approx(1.2));
  CHECK_THROWS(make_1d_game({-1.0, 1.0, 0.0, 1.0}));
}

TEST_CASE("sampled hamiltonian equals the analytic one on affine systems", "[oracles]") {
  const RelativeSystem sys =
      make_case2(AuvParams{}, PaperWave(), {0.2185, 0.1373, 0.0, 0.0, 0.03, 0.025});
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    double r[4], p[4];
    for (int k = 0; k < 4; ++k) {
      r[k] = u(rng);
      p[k] = u(rng);
    }
    const double t = 5.0 * (u(rng) + 1.0);
    const double h = hamiltonian(sys, t, r, p);
    const double scale = std::max(1.0, std::abs(h));
    const double e3 = std::abs(sampled_hamiltonian(sys, t, r, p, 3) - h);
    const double e21 = std::abs(sampled_hamiltonian(sys, t, r, p, 21) - h);
    CHECK(e21 <= 1e-9 * scale);
    CHECK(e21 <= e3 + 1e-12 * scale);
  }
}

TEST_CASE("sampled hamiltonian with zero gradient", "[oracles]") {
  const RelativeSystem sys = make_1d_game({2.0, 1.0, 0.5, 1.0});
  const double r[1] = {0.4};
  const double p[1] = {0.0};
  CHECK(sampled_hamiltonian(sys, 0.0, r, p, 5) == 0.0);
  CHECK_THROWS(sampled_hamiltonian(sys, 0.0, r, p, 1));
}

TEST_CASE("envelope residual against reference parameters", "[oracles][envelope]") {
  const Region2D region{-2.0, 2.0, 2.0, 6.0};
  const Case2WaveEnvelope reference{0.2185, 0.1373, 0.0, 0.0, 0.03, 0.025};
  CHECK(envelope_residual(PaperWave(), reference, region, 10000) <= 1e-3);

  const Case2WaveEnvelope fitted = fit_case2_envelope(PaperWave(), region, 10.0);
  CHECK(envelope_residual(PaperWave(), fitted, region, 10000) <= 0.0);

  Case2WaveEnvelope wider = fitted;
  wider.D_W *= 2.0;
  CHECK(envelope_residual(PaperWave(), wider, region, 10000) <= 0.0);

  Case2WaveEnvelope tight = fitted;
  tight.D_W = 0.0;
  CHECK(envelope_residual(PaperWave(), tight, region, 10000) > 0.0);
}

TEST_CASE("case 3 residual", "[oracles][envelope]") {
  const Region2D region{-2.0, 2.0, 2.0, 6.0};
  const Case3WaveBounds b = fit_case3_bounds(PaperWave(), region, 10.0);
  CHECK(case3_residual(PaperWave(), b, region, 10000) <= 0.0);
  CHECK(case3_residual(PaperWave(), {0.5 * b.D_W, b.D_A}, region, 10000) > 0.0);
}

TEST_CASE("rk4 step integrates a cubic exactly", "[oracles]") {
  // x' = 3 t^2 has x(t) = t^3; RK4 is exact for polynomials up to degree 4 in t.
  const auto f = [](double t, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 3 * t * t); };
  const Eigen::VectorXd x = Rk4Step(f, 1.0, Eigen::VectorXd::Constant(1, 1.0), 0.5);
  CHECK(x[0] == Approx(3.375).epsilon(1e-14));
}
