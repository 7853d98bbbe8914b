#include "wavetrack/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/hj_solver.hpp"
#include "wavetrack/oracles.hpp"
#include "wavetrack/replanner.hpp"
#include "wavetrack/scenario.hpp"
#include "wavetrack/value_function.hpp"

namespace wavetrack {

namespace {

std::string Fmt(const char* fmt, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

CheckResult OneDimensional(const char* name, const Analytic1DGame& game, double tol_base) {
  HJIProblem pr;
  pr.system = std::make_shared<RelativeSystem>(make_1d_game(game));
  pr.grid = Grid({Axis{-2.0, 2.0, 201}});
  pr.t_off = game.t_off;
  SolveStats stats;
  const ValueFunction vf = solve(pr, &stats);
  double err = 0.0;
  for (int k = 0; k < vf.slice_count(); ++k) {
    for (std::size_t n = 0; n < vf.grid.size(); ++n) {
      const double r = vf.grid.Node(n)[0];
      // Keep clear of the artificial boundary where information flows inward.
      if (game.a < game.b + game.e && std::abs(r) > 1.5) continue;
      err = std::max(err, std::abs(vf.slices[k][n] - analytic_value(game, r, vf.times[k])));
    }
  }
  const double tol = tol_base + 0.1 * stats.max_dt;
  return {name, err <= tol, Fmt("max error %.3g (bound %.3g)", err, tol)};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(OneDimensional("oracle_1d_dominant_tracker", {2.0, 1.0, 0.0, 1.0}, 0.05));
  out.push_back(OneDimensional("oracle_1d_dominant_adversary", {1.0, 2.0, 0.0, 1.0}, 0.05));

  {
    const WaveParams wave;
    const Region2D region{-2, 2, 2, 6};
    const Case2WaveEnvelope env = fit_case2_envelope(wave, region, wave.period());
    const RelativeSystem sys = make_case2(AuvParams{}, wave, env);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(-1.0, 1.0), ut(0.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < options.hamiltonian_probes; ++i) {
      std::vector<double> r(4), p(4);
      for (int j = 0; j < 4; ++j) {
        r[j] = ur(rng);
        p[j] = ur(rng);
      }
      const double t = ut(rng);
      const double a = hamiltonian(sys, t, r, p);
      const double b = sampled_hamiltonian(sys, t, r, p, options.hamiltonian_density);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    out.push_back({"hamiltonian_oracle", worst <= 1e-9, Fmt("max relative gap %.3g", worst)});

    const double res = envelope_residual(wave, env, region, options.envelope_samples);
    out.push_back({"envelope_containment", res <= 1e-12, Fmt("worst residual %.3g", res)});
    Case2WaveEnvelope tight = env;
    tight.D_W = 0.0;
    const double res0 = envelope_residual(wave, tight, region, options.envelope_samples);
    out.push_back({"envelope_detects_violation", res0 > 0, Fmt("residual with D_W = 0: %.3g", res0)});
  }

  {
    const auto a = earliest_equiv_interval(23, 26, 10);
    const auto b = earliest_equiv_interval(20, 24, 10);
    const bool ok = a.first == 3 && a.second == 6 && b.first == 0 && b.second == 4;
    out.push_back({"earliest_equivalent_interval", ok, ok ? "exact" : "mismatch"});
  }

  {
    HJIProblem pr;
    pr.system = std::make_shared<RelativeSystem>(make_1d_game({2.0, 1.0, 0.0, 0.2}));
    pr.grid = Grid({Axis{-1.0, 1.0, 41}});
    pr.t_off = 0.2;
    const ValueFunction vf = solve(pr);
    const auto path = std::filesystem::temp_directory_path() / "wavetrack_selfcheck.wtvf";
    bool ok = false;
    std::string detail;
    try {
      SaveValueFunction(vf, path);
      const ValueFunction back = LoadValueFunction(path);
      ok = back.times == vf.times && back.slices == vf.slices && back.grid == vf.grid;
      detail = ok ? "bit-identical" : "data differs";
    } catch (const std::exception& e) {
      detail = e.what();
    }
    std::error_code ec;
    std::filesystem::remove(path, ec);
    out.push_back({"value_file_round_trip", ok, detail});
  }

  if (options.value_function) {
    CheckResult c{"value_file_load", false, ""};
    try {
      const ValueFunctionMeta meta = ReadSidecar(*options.value_function);
      const std::string actual = FileSha256(*options.value_function);
      if (actual != meta.content_hash) {
        c.detail = "content hash does not match the metadata";
      } else {
        const ValueFunction vf = LoadValueFunction(*options.value_function);
        vf.Validate();
        c.passed = true;
        c.detail = std::to_string(vf.slice_count()) + " slices";
      }
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace wavetrack
