// Command-line front end: offline solve, closed-loop simulation, one-shot
// planning, oracle self-check and value-function export.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wavetrack/hj_solver.hpp"
#include "wavetrack/planner.hpp"
#include "wavetrack/replanner.hpp"
#include "wavetrack/safesets.hpp"
#include "wavetrack/scenario.hpp"
#include "wavetrack/selfcheck.hpp"
#include "wavetrack/sim.hpp"
#include "wavetrack/value_function.hpp"

using namespace wavetrack;
using json = nlohmann::json;

namespace {

// Documented exit codes.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;
constexpr int kExitHash = 5;

struct CliError {
  int code;
  std::string message;
};

Scenario Load(const std::string& path, std::optional<std::uint64_t> seed) {
  Scenario sc = LoadScenario(path);
  if (seed && sc.online) {
    sc.online->seed = *seed;
    sc.source["online"]["seed"] = *seed;
  }
  return sc;
}

// Loads a value function after checking it belongs to the scenario.
ValueFunction LoadMatching(const Scenario& sc, const std::filesystem::path& path) {
  ValueFunctionMeta meta;
  try {
    meta = ReadSidecar(path);
  } catch (const std::exception& e) {
    throw CliError{kExitIo, e.what()};
  }
  if (meta.model_hash != sc.ModelHash())
    throw CliError{kExitHash, "value function was computed for a different model (" +
                                  meta.model_hash.substr(0, 12) + " vs " +
                                  sc.ModelHash().substr(0, 12) + ")"};
  std::string actual;
  try {
    actual = FileSha256(path);
  } catch (const std::exception& e) {
    throw CliError{kExitIo, e.what()};
  }
  if (actual != meta.content_hash) throw CliError{kExitHash, "value function content hash mismatch"};
  try {
    return LoadValueFunction(path);
  } catch (const std::exception& e) {
    throw CliError{kExitIo, e.what()};
  }
}

std::filesystem::path DefaultValuePath(const Scenario& sc, const std::string& flag) {
  return flag.empty() ? sc.OutputPath() : std::filesystem::path(flag);
}

int CmdSolve(const std::string& scenario_path, const std::string& out_flag, bool quiet) {
  const Scenario sc = Load(scenario_path, std::nullopt);
  const HJIProblem pr = MakeScenarioProblem(sc);
  const std::filesystem::path out = DefaultValuePath(sc, out_flag);
  SolveStats stats;
  double last = pr.t_off;
  const auto progress = [&](double t) {
    if (quiet || last - t < 0.5) return;
    last = t;
    std::fprintf(stderr, "solve: t = %.2f\n", t);
  };
  ValueFunction vf;
  try {
    vf = solve(pr, &stats, progress);
  } catch (const SolverError& e) {
    throw CliError{kExitSolver, e.what()};
  }
  try {
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    SaveValueFunction(vf, out);
    ValueFunctionMeta meta;
    meta.model_hash = sc.ModelHash();
    meta.content_hash = FileSha256(out);
    meta.extra = {{"scenario", sc.name},
                  {"t_off", pr.t_off},
                  {"dims", vf.grid.dims()},
                  {"slices", vf.slice_count()},
                  {"steps", stats.steps},
                  {"seconds", stats.seconds}};
    WriteSidecar(out, meta);
    json summary = meta.extra;
    summary["path"] = out.string();
    summary["content_hash"] = meta.content_hash;
    summary["model_hash"] = meta.model_hash;
    std::cout << summary.dump() << '\n';
  } catch (const std::exception& e) {
    throw CliError{kExitIo, e.what()};
  }
  return kExitOk;
}

int CmdSimulate(const std::string& scenario_path, const std::string& vf_flag,
                const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const Scenario sc = Load(scenario_path, seed);
  if (!sc.online) throw ConfigError("scenario has no online section");
  const ValueFunction vf = LoadMatching(sc, DefaultValuePath(sc, vf_flag));
  SimLog log;
  try {
    log = run(sc, vf);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw CliError{kExitSolver, e.what()};
  }
  if (!out_dir.empty()) {
    try {
      log.WriteAll(out_dir);
    } catch (const std::exception& e) {
      throw CliError{kExitIo, e.what()};
    }
  }
  std::cout << log.Summary().dump() << '\n';
  return kExitOk;
}

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + item + "'");
    }
  }
  return out;
}

int CmdPlan(const std::string& scenario_path, const std::string& vf_flag, double at_time,
            const std::string& state_text, std::optional<double> level_flag,
            const std::string& out_path) {
  const Scenario sc = Load(scenario_path, std::nullopt);
  if (!sc.online) throw ConfigError("scenario has no online section");
  const OnlineConfig& on = *sc.online;
  const ValueFunction vf = LoadMatching(sc, DefaultValuePath(sc, vf_flag));
  const auto system = MakeScenarioSystem(sc);

  Eigen::VectorXd s = on.s0;
  if (!state_text.empty()) {
    const std::vector<double> v = ParseList(state_text);
    if (static_cast<Eigen::Index>(v.size()) != s.size())
      throw ConfigError("--state needs " + std::to_string(s.size()) + " values");
    s = Eigen::Map<const Eigen::VectorXd>(v.data(), s.size());
  }
  double t_i = at_time, t_f = std::min(on.T_run, vf.t_off());
  if (on.periodic) std::tie(t_i, t_f) = earliest_equiv_interval(at_time, at_time + on.T_prime, on.tau);
  if (t_i < 0 || t_i > t_f) throw ConfigError("--at-time outside the planning horizon");

  // Inspection assumes every obstacle is already known.
  ConstraintTimeline timeline = initial_timeline(sc);
  for (const Rect& r : on.obstacles) {
    const double h = 0.5 * on.resolution;
    timeline.grid.FillRect({r.x_min - h, r.x_max + h, r.z_min - h, r.z_max + h});
  }
  OccupancyGrid2D goal = timeline.grid.Blank();
  const Rect& g = on.goals.front();
  const double h = 0.5 * on.resolution;
  goal.FillRect({g.x_min + h, g.x_max - h, g.z_min + h, g.z_max - h});

  const double floor = min_value_level(vf, *system, s, t_i);
  const double c = std::max(floor, level_flag.value_or(floor));
  const int N = static_cast<int>(std::floor((t_f - t_i) / on.T_s + 1e-9));
  const auto cs = build_constraint_set(vf, ErrorAxes::From(*system), timeline.grid, goal, t_i, N,
                                       on.T_s, c);

  PlanRequest req;
  req.t_i = t_i;
  req.t_f = t_f;
  req.p0 = Eigen::Vector2d(s[0], s[1]);
  req.constraints = cs;
  req.u_p_box = system->u_p_box();
  req.T_s = on.T_s;
  req.goal_required = on.goal_required;
  req.Q = on.Q;
  req.R = on.R;
  const OccupancyGrid2D& ref_grid = cs->goals.front().Empty() ? goal : cs->goals.front();
  double cx = 0, cz = 0;
  int count = 0;
  for (int j = 0; j < ref_grid.nz(); ++j)
    for (int i = 0; i < ref_grid.nx(); ++i)
      if (ref_grid.at(i, j)) {
        cx += ref_grid.CenterX(i);
        cz += ref_grid.CenterZ(j);
        ++count;
      }
  req.p_ref = count ? Eigen::Vector2d(cx / count, cz / count) : Eigen::Vector2d(g.x_min, g.z_min);

  const PlanResult result = plan_over_interval(req);
  if (const auto* bad = std::get_if<PlanInfeasible>(&result)) {
    std::cout << json{{"feasible", false},
                      {"level", c},
                      {"floor", floor},
                      {"blocked_step", bad->blocked_step},
                      {"blocked_time", bad->blocked_time},
                      {"reason", bad->reason}}
                     .dump()
              << '\n';
    return kExitOk;
  }
  const auto& traj = std::get<PlannedTrajectory>(result);
  if (out_path.empty()) {
    WritePlanCsv(traj, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw CliError{kExitIo, "cannot write " + out_path};
    WritePlanCsv(traj, out);
    json summary = {{"feasible", true},
                    {"level", c},
                    {"floor", floor},
                    {"steps", traj.controls.size()},
                    {"cost", traj.cost}};
    summary["goal_time"] = traj.goal_time ? json(*traj.goal_time) : json(nullptr);
    std::cout << summary.dump() << '\n';
  }
  return kExitOk;
}

int CmdSelfcheck(const std::string& vf_path) {
  SelfCheckOptions opt;
  if (!vf_path.empty()) opt.value_function = vf_path;
  const std::vector<CheckResult> results = run_selfcheck(opt);
  bool all = true;
  for (const CheckResult& r : results) {
    std::printf("%-32s %s  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    all = all && r.passed;
  }
  return all ? kExitOk : kExitFailure;
}

int CmdExport(const std::string& scenario_path, const std::string& vf_flag, double at_time,
              double level, const std::string& out_path) {
  const Scenario sc = Load(scenario_path, std::nullopt);
  const ValueFunction vf = LoadMatching(sc, DefaultValuePath(sc, vf_flag));
  const auto system = MakeScenarioSystem(sc);
  const ErrorAxes ex = ErrorAxes::From(*system);
  const TEB teb = teb_approx(vf, ex, at_time, level);
  json shape = json::array();
  for (const auto& p : teb.shape) shape.push_back({p[0], p[1]});
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(vf.grid.dims());
  const ErrorPlane plane = ErrorSlice(vf, ex, zero, at_time);
  json doc = {{"time", at_time},
              {"level", level},
              {"teb_radius", teb.radius},
              {"teb_margin", teb.margin},
              {"teb_shape", shape},
              {"error_axis_0", {plane.a0.min, plane.a0.max, plane.n0}},
              {"error_axis_1", {plane.a1.min, plane.a1.max, plane.n1}},
              {"value_at_zero_velocity", plane.values}};
  std::ofstream out(out_path);
  if (!out) throw CliError{kExitIo, "cannot write " + out_path};
  out << doc.dump() << '\n';
  std::cout << json{{"path", out_path}, {"teb_radius", teb.radius}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline value functions and online safe replanning for wave-disturbed AUVs"};
  app.require_subcommand(1);

  std::string scenario, vf_path, out, out_dir, state;
  double at_time = 0.0, level = 0.0;
  std::optional<double> level_opt;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  auto* solve_cmd = app.add_subcommand("solve", "Solve the offline game and write the value function");
  solve_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  solve_cmd->add_option("--out", out, "Output WTVF path (default: offline.output)");
  solve_cmd->add_flag("--quiet", quiet, "No progress on stderr");

  auto* sim_cmd = app.add_subcommand("simulate", "Run the closed-loop simulation");
  sim_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  sim_cmd->add_option("--value-fn", vf_path, "WTVF file (default: offline.output)");
  sim_cmd->add_option("--out-dir", out_dir, "Directory for traces, events and snapshots");
  sim_cmd->add_option("--seed", seed, "Override the disturbance seed");

  auto* plan_cmd = app.add_subcommand("plan", "Plan once from a given time and state");
  plan_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  plan_cmd->add_option("--value-fn", vf_path, "WTVF file (default: offline.output)");
  plan_cmd->add_option("--at-time", at_time, "Planning start time");
  plan_cmd->add_option("--state", state, "Tracking state x,z,u_r,w_r (default: s0)");
  plan_cmd->add_option("--level", level_opt, "Value level (clamped up to the floor)");
  plan_cmd->add_option("--out", out, "Plan CSV path (default: stdout)");

  auto* check_cmd = app.add_subcommand("selfcheck", "Run the reference oracles");
  check_cmd->add_option("--value-fn", vf_path, "Also verify this WTVF file");

  auto* export_cmd = app.add_subcommand("export", "Export the error bound and a value slice");
  export_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  export_cmd->add_option("--value-fn", vf_path, "WTVF file (default: offline.output)");
  export_cmd->add_option("--at-time", at_time, "Time of the slice");
  export_cmd->add_option("--level", level, "Value level")->required();
  export_cmd->add_option("--out", out, "Output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve_cmd) return CmdSolve(scenario, out, quiet);
    if (*sim_cmd) return CmdSimulate(scenario, vf_path, out_dir, seed);
    if (*plan_cmd) return CmdPlan(scenario, vf_path, at_time, state, level_opt, out);
    if (*check_cmd) return CmdSelfcheck(vf_path);
    if (*export_cmd) return CmdExport(scenario, vf_path, at_time, level, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
