#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wavetrack/dynamics.hpp"

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

Region2D PaperRegion() { return {-2.0, 2.0, 2.0, 6.0}; }

}  // namespace

TEST_CASE("input box construction and queries", "[dynamics]") {
  const InputBox box = InputBox::Symmetric(Eigen::Vector2d(1.0, 2.0));
  CHECK(box.contains(Eigen::Vector2d(1.0, -2.0)));
  CHECK_FALSE(box.contains(Eigen::Vector2d(1.1, 0.0)));
  CHECK(box.contains(Eigen::Vector2d(1.1, 0.0), 0.2));
  CHECK(box.clamp(Eigen::Vector2d(5.0, -5.0)).isApprox(Eigen::Vector2d(1.0, -2.0)));
  CHECK_THROWS_AS(InputBox(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0)),
                  std::invalid_argument);
  const InputBox stacked = InputBox::Stack(box, InputBox::Symmetric(Eigen::VectorXd::Ones(1)));
  CHECK(stacked.size() == 3);
  CHECK(stacked.upper[2] == 1.0);
}

TEST_CASE("wave velocity at the origin and a quarter period", "[dynamics][wave]") {
  const WaveParams w = PaperWave();
  // A omega = 0.4 * 0.2 pi.
  const double a_omega = 0.25132741228718347;
  auto v = wave_velocity(w, 0.0, 0.0, 0.0);
  CHECK(v[0] == Approx(a_omega).epsilon(1e-12));
  CHECK(v[1] == Approx(0.0).margin(1e-15));
  v = wave_velocity(w, 0.0, 0.0, 2.5);
  CHECK(v[0] == Approx(0.0).margin(1e-12));
  CHECK(v[1] == Approx(a_omega).epsilon(1e-12));
}

TEST_CASE("wave acceleration at the origin and half a period", "[dynamics][wave]") {
  const WaveParams w = PaperWave();
  // A omega^2 = 0.4 * (0.2 pi)^2.
  const double a_omega2 = 0.15791367041742974;
  auto a = wave_acceleration(w, 0.0, 0.0, 0.0);
  CHECK(a[0] == Approx(0.0).margin(1e-15));
  CHECK(a[1] == Approx(a_omega2).epsilon(1e-12));
  a = wave_acceleration(w, 0.0, 0.0, 5.0);
  CHECK(a[0] == Approx(0.0).margin(1e-12));
  CHECK(a[1] == Approx(-a_omega2).epsilon(1e-12));
}

TEST_CASE("wave magnitudes follow the depth decay", "[dynamics][wave]") {
  const WaveParams w = PaperWave();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), uz(0.0, 50.0), ut(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const double x = ux(rng), z = uz(rng), t = ut(rng);
    const double decay = std::exp(-w.wavenumber * z);
    const auto v = wave_velocity(w, x, z, t);
    const auto a = wave_acceleration(w, x, z, t);
    CHECK(std::hypot(v[0], v[1]) == Approx(w.amplitude * w.frequency * decay).epsilon(1e-12));
    CHECK(std::hypot(a[0], a[1]) ==
          Approx(w.amplitude * w.frequency * w.frequency * decay).epsilon(1e-12));
  }
}

TEST_CASE("auv right-hand side at rest", "[dynamics][auv]") {
  const AuvParams p;
  const auto rhs = auv_rhs(p, {0, 0, 0, 0}, {0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0});
  CHECK(rhs[0] == 0.0);
  CHECK(rhs[1] == 0.0);
  CHECK(rhs[2] == 0.0);
  // g (m - m_bar) / (m - Z_dw): the slightly buoyant vehicle accelerates upward (z is depth).
  CHECK(rhs[3] == Approx(-0.00393186372745491).epsilon(1e-12));

  AuvParams neutral;
  neutral.m_bar = neutral.m;
  const auto zero = auv_rhs(neutral, {0, 0, 0, 0}, {0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0});
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("auv kinematic rows are sums", "[dynamics][auv]") {
  const AuvParams p;
  const auto rhs = auv_rhs(p, {1.0, 2.0, 0.3, -0.2}, {10.0, -5.0}, {0.01, 0.02, 0.0, 0.0},
                           {0.1, -0.05, 0.0, 0.0});
  CHECK(rhs[0] == Approx(0.3 + 0.1 + 0.01));
  CHECK(rhs[1] == Approx(-0.2 - 0.05 + 0.02));
}

TEST_CASE("case model dimensions", "[dynamics][cases]") {
  const AuvParams p;
  const WaveParams w = PaperWave();
  CHECK(make_case1(p, w).relative_dim() == 6);
  const Case2WaveEnvelope env{0.2185, 0.1373, 0.0, 0.0, 0.03, 0.025};
  const RelativeSystem c2 = make_case2(p, w, env);
  CHECK(c2.relative_dim() == 4);
  CHECK(c2.planning_dim() == 2);
  CHECK(make_case3(p, {0.2319, 0.1457}).relative_dim() == 4);
}

TEST_CASE("case 2 relative field is wave-periodic and case 3 is time-invariant",
          "[dynamics][cases]") {
  const AuvParams p;
  const WaveParams w = PaperWave();
  const RelativeSystem c2 = make_case2(p, w, {0.2185, 0.1373, 0.0, 0.0, 0.03, 0.025});
  const RelativeSystem c3 = make_case3(p, {0.2319, 0.1457});
  const double tau = 2.0 * std::numbers::pi / w.frequency;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd r(4);
    for (int k = 0; k < 4; ++k) r[k] = u(rng);
    const Eigen::VectorXd us = Eigen::Vector2d(300 * u(rng), 300 * u(rng));
    const Eigen::VectorXd up = Eigen::Vector2d(0.3 * u(rng), 0.3 * u(rng));
    Eigen::VectorXd d2 = Eigen::VectorXd::Zero(8), d3 = Eigen::VectorXd::Zero(8);
    const double t = 3.0 * (u(rng) + 1.0);
    const Eigen::VectorXd a = c2.Field(t, r, us, up, d2);
    const Eigen::VectorXd b = c2.Field(t + tau, r, us, up, d2);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(c3.Field(0.0, r, us, up, d3) == c3.Field(5.0, r, us, up, d3));
  }
}

TEST_CASE("relative field equals the composition of the original fields", "[dynamics][cases]") {
  const AuvParams p;
  const WaveParams w = PaperWave();
  const RelativeSystem sys = make_case2(p, w, {0.2185, 0.1373, 0.3, -0.1, 0.03, 0.025});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd s(4), pl(2), us(2), up(2), d(8);
    for (int k = 0; k < 4; ++k) s[k] = 2.0 * u(rng);
    for (int k = 0; k < 2; ++k) pl[k] = 2.0 * u(rng);
    for (int k = 0; k < 2; ++k) us[k] = 500.0 * u(rng);
    for (int k = 0; k < 2; ++k) up[k] = 0.3 * u(rng);
    for (int k = 0; k < 8; ++k) d[k] = 0.01 * u(rng);
    const double t = 10.0 * (u(rng) + 1.0);
    const Eigen::VectorXd r = sys.RelativeState(s, pl);
    const Eigen::VectorXd g = sys.Field(t, r, us, up, d);
    const Eigen::VectorXd ref = sys.ComposedField(t, s, pl, us, up, d);
    CHECK((g - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("envelope fit on a single point leaves no residual box", "[dynamics][envelope]") {
  const WaveParams w = PaperWave();
  const Region2D point{0.5, 0.5, 3.0, 3.0};
  const Case2WaveEnvelope env = fit_case2_envelope(w, point, 10.0, {3, 3, 201});
  CHECK(env.D_W == Approx(0.0).margin(1e-9));
  CHECK(env.D_A == Approx(0.0).margin(1e-9));
  CHECK(env.A_W == Approx(w.amplitude * w.frequency * std::exp(-w.wavenumber * 3.0)).epsilon(1e-6));
}

TEST_CASE("fitted envelope amplitudes on the reference region", "[dynamics][envelope]") {
  const Case2WaveEnvelope env = fit_case2_envelope(PaperWave(), PaperRegion(), 10.0);
  CHECK(env.A_W == Approx(0.2185).epsilon(0.05));
  CHECK(env.A_A == Approx(0.1373).epsilon(0.05));
  CHECK(env.D_W > 0.0);
  CHECK(env.D_A > 0.0);
  const Case3WaveBounds b3 = fit_case3_bounds(PaperWave(), PaperRegion(), 10.0);
  CHECK(b3.D_W == Approx(0.2319).epsilon(0.05));
  CHECK(b3.D_A == Approx(0.1457).epsilon(0.05));
}

TEST_CASE("periodic wrap", "[dynamics]") {
  CHECK(periodic_wrap(23.0, 10.0) == Approx(3.0));
  CHECK(periodic_wrap(10.0, 10.0) == 0.0);
  CHECK(periodic_wrap(9.99, 10.0) == 9.99);
  CHECK(periodic_wrap(-1.0, 10.0) == Approx(9.0));
  CHECK_THROWS(periodic_wrap(1.0, 0.0));
}
