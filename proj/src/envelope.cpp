#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/geometry.hpp"

namespace wavetrack {
namespace {

void CheckInputs(const WaveParams& wave, const Region2D& region, double horizon,
                 const EnvelopeSampling& sampling) {
  wave.Validate();
  if (!(region.x_min <= region.x_max) || !(region.z_min <= region.z_max))
    throw std::invalid_argument("envelope fit: empty region");
  if (!(horizon > 0)) throw std::invalid_argument("envelope fit: horizon must be positive");
  if (sampling.nx < 1 || sampling.nz < 1 || sampling.nt < 2)
    throw std::invalid_argument("envelope fit: sampling counts too small");
}

double Sample(double lo, double hi, int n, int i) {
  return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
}

// Velocity phasor a(z) e^{ikx}; (W_x, -W_z) = Re/Im of phasor * e^{-i w t}.
// The acceleration phasor is the same one scaled by w.
std::vector<std::complex<double>> VelocityPhasors(const WaveParams& wave, const Region2D& region,
                                                  const EnvelopeSampling& sampling) {
  std::vector<std::complex<double>> out;
  out.reserve(static_cast<std::size_t>(sampling.nx) * sampling.nz);
  for (int j = 0; j < sampling.nz; ++j) {
    const double z = Sample(region.z_min, region.z_max, sampling.nz, j);
    const double mag = wave.amplitude * wave.frequency * std::exp(-wave.wavenumber * z);
    for (int i = 0; i < sampling.nx; ++i) {
      const double x = Sample(region.x_min, region.x_max, sampling.nx, i);
      out.push_back(std::polar(mag, wave.wavenumber * x));
    }
  }
  return out;
}

// Largest per-component magnitude of residual phasors rotated over [0, horizon].
// Over a full period the rotation sweeps every direction, so the bound is |delta|.
double ResidualBound(const std::vector<std::complex<double>>& residuals, double omega,
                     double horizon, double period, int nt) {
  double bound = 0.0;
  if (horizon >= period) {
    for (const auto& r : residuals) bound = std::max(bound, std::abs(r));
    return bound;
  }
  for (int k = 0; k < nt; ++k) {
    const std::complex<double> rot = std::polar(1.0, -omega * horizon * k / (nt - 1));
    for (const auto& r : residuals) {
      const auto v = r * rot;
      bound = std::max({bound, std::abs(v.real()), std::abs(v.imag())});
    }
  }
  return bound;
}

}  // namespace

Case2WaveEnvelope fit_case2_envelope(const WaveParams& wave, const Region2D& region,
                                     double horizon, const EnvelopeSampling& sampling) {
  CheckInputs(wave, region, horizon, sampling);
  const auto phasors = VelocityPhasors(wave, region, sampling);
  std::vector<std::array<double, 2>> points;
  points.reserve(phasors.size());
  for (const auto& c : phasors) points.push_back({c.real(), c.imag()});
  const Circle circle = MinEnclosingCircle(points);
  const std::complex<double> center(circle.center[0], circle.center[1]);

  std::vector<std::complex<double>> residuals;
  residuals.reserve(phasors.size());
  for (const auto& c : phasors) residuals.push_back(c - center);

  Case2WaveEnvelope env;
  env.A_W = std::abs(center);
  env.phi_W = env.A_W > 0 ? std::arg(center) : 0.0;
  env.A_A = wave.frequency * env.A_W;
  env.phi_A = env.phi_W;
  env.D_W = ResidualBound(residuals, wave.frequency, horizon, wave.period(), sampling.nt);
  env.D_A = wave.frequency * env.D_W;
  return env;
}

Case3WaveBounds fit_case3_bounds(const WaveParams& wave, const Region2D& region, double horizon,
                                 const EnvelopeSampling& sampling) {
  CheckInputs(wave, region, horizon, sampling);
  const auto phasors = VelocityPhasors(wave, region, sampling);
  Case3WaveBounds b;
  b.D_W = ResidualBound(phasors, wave.frequency, horizon, wave.period(), sampling.nt);
  b.D_A = wave.frequency * b.D_W;
  return b;
}

}  // namespace wavetrack
