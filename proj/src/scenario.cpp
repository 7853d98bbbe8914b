#include "wavetrack/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "wavetrack/hash.hpp"

namespace wavetrack {

namespace {

using json = nlohmann::json;

void AllowKeys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double Num(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

double NumRequired(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return Num(obj, key, 0.0, where);
}

int Int(const json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

bool Bool(const json& obj, const char* key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected true/false");
  return v.get<bool>();
}

std::string Str(const json& obj, const char* key, const std::string& fallback,
                const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Rect ParseRect(const json& j, const std::string& where) {
  AllowKeys(j, {"x_min", "x_max", "z_min", "z_max"}, where);
  Rect r{NumRequired(j, "x_min", where), NumRequired(j, "x_max", where),
         NumRequired(j, "z_min", where), NumRequired(j, "z_max", where)};
  if (!(r.x_max > r.x_min && r.z_max > r.z_min)) throw ConfigError(where + ": empty rectangle");
  return r;
}

std::vector<Rect> ParseRects(const json& obj, const char* key, const std::string& where) {
  std::vector<Rect> out;
  if (!obj.contains(key)) return out;
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw ConfigError(where + "." + key + ": expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(ParseRect(arr[i], where + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

StateRegion ParseRegion(const json& j, const std::string& where) {
  AllowKeys(j, {"axis", "threshold", "above"}, where);
  StateRegion r;
  r.axis = Int(j, "axis", 1, where);
  r.threshold = NumRequired(j, "threshold", where);
  r.above = Bool(j, "above", true, where);
  if (r.axis < 0) throw ConfigError(where + ".axis: must be non-negative");
  return r;
}

Eigen::Matrix2d ParseDiag(const json& obj, const char* key, const Eigen::Matrix2d& fallback,
                          const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(where + "." + key + ": expected two numbers (diagonal)");
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  m(0, 0) = v[0].get<double>();
  m(1, 1) = v[1].get<double>();
  if (m(0, 0) < 0 || m(1, 1) < 0) throw ConfigError(where + "." + key + ": weights must be >= 0");
  return m;
}

void ParseModel(const json& m, Scenario& sc) {
  const std::string w = "model";
  AllowKeys(m, {"case", "auv", "wave", "bounds", "workspace", "envelope", "game"}, w);
  const std::string c = Str(m, "case", "", w);
  if (c == "analytic_1d") sc.model_case = ModelCase::kAnalytic1D;
  else if (c == "case1") sc.model_case = ModelCase::kCase1;
  else if (c == "case2") sc.model_case = ModelCase::kCase2;
  else if (c == "case3") sc.model_case = ModelCase::kCase3;
  else throw ConfigError("model.case: expected analytic_1d, case1, case2 or case3");

  if (m.contains("auv")) {
    const json& a = m.at("auv");
    const std::string wa = "model.auv";
    AllowKeys(a, {"m", "m_bar", "X_du", "Z_dw", "X_u", "Z_w", "X_absuu", "Z_abswu", "g"}, wa);
    AuvParams& p = sc.auv;
    p.m = Num(a, "m", p.m, wa);
    p.m_bar = Num(a, "m_bar", p.m_bar, wa);
    p.X_du = Num(a, "X_du", p.X_du, wa);
    p.Z_dw = Num(a, "Z_dw", p.Z_dw, wa);
    p.X_u = Num(a, "X_u", p.X_u, wa);
    p.Z_w = Num(a, "Z_w", p.Z_w, wa);
    p.X_absuu = Num(a, "X_absuu", p.X_absuu, wa);
    p.Z_abswu = Num(a, "Z_abswu", p.Z_abswu, wa);
    p.g = Num(a, "g", p.g, wa);
  }
  if (m.contains("wave")) {
    const json& a = m.at("wave");
    AllowKeys(a, {"amplitude", "frequency", "wavenumber"}, "model.wave");
    sc.wave.amplitude = Num(a, "amplitude", sc.wave.amplitude, "model.wave");
    sc.wave.frequency = Num(a, "frequency", sc.wave.frequency, "model.wave");
    sc.wave.wavenumber = Num(a, "wavenumber", sc.wave.wavenumber, "model.wave");
  }
  if (m.contains("bounds")) {
    const json& a = m.at("bounds");
    AllowKeys(a, {"thrust_max", "planner_speed_max", "nominal_disturbance"}, "model.bounds");
    sc.bounds.thrust_max = Num(a, "thrust_max", sc.bounds.thrust_max, "model.bounds");
    sc.bounds.planner_speed_max =
        Num(a, "planner_speed_max", sc.bounds.planner_speed_max, "model.bounds");
    sc.bounds.nominal_disturbance =
        Num(a, "nominal_disturbance", sc.bounds.nominal_disturbance, "model.bounds");
  }
  if (m.contains("workspace")) {
    const Rect r = ParseRect(m.at("workspace"), "model.workspace");
    sc.workspace = {r.x_min, r.x_max, r.z_min, r.z_max};
  }
  if (m.contains("envelope")) {
    const json& e = m.at("envelope");
    const std::string we = "model.envelope";
    AllowKeys(e, {"horizon", "A_W", "A_A", "phi_W", "phi_A", "D_W", "D_A"}, we);
    sc.envelope_horizon = Num(e, "horizon", sc.envelope_horizon, we);
    const bool any_case2 = e.contains("A_W") || e.contains("A_A");
    if (any_case2) {
      Case2WaveEnvelope env;
      env.A_W = NumRequired(e, "A_W", we);
      env.A_A = NumRequired(e, "A_A", we);
      env.phi_W = Num(e, "phi_W", 0.0, we);
      env.phi_A = Num(e, "phi_A", 0.0, we);
      env.D_W = NumRequired(e, "D_W", we);
      env.D_A = NumRequired(e, "D_A", we);
      sc.envelope = env;
    } else if (e.contains("D_W") || e.contains("D_A")) {
      sc.case3_bounds = Case3WaveBounds{NumRequired(e, "D_W", we), NumRequired(e, "D_A", we)};
    }
  }
  if (m.contains("game")) {
    const json& g = m.at("game");
    AllowKeys(g, {"a", "b", "e"}, "model.game");
    sc.game.a = Num(g, "a", sc.game.a, "model.game");
    sc.game.b = Num(g, "b", sc.game.b, "model.game");
    sc.game.e = Num(g, "e", sc.game.e, "model.game");
  }
}

void ParseOffline(const json& o, Scenario& sc) {
  const std::string w = "offline";
  AllowKeys(o, {"grid", "t_off", "cfl", "accuracy", "save_interval", "output"}, w);
  if (!o.contains("grid") || !o.at("grid").is_array() || o.at("grid").empty())
    throw ConfigError("offline.grid: expected a non-empty array of axes");
  for (std::size_t i = 0; i < o.at("grid").size(); ++i) {
    const json& a = o.at("grid")[i];
    const std::string wa = "offline.grid[" + std::to_string(i) + "]";
    AllowKeys(a, {"min", "max", "count"}, wa);
    Axis ax{NumRequired(a, "min", wa), NumRequired(a, "max", wa), Int(a, "count", 0, wa)};
    if (!(ax.max > ax.min) || ax.count < 3) throw ConfigError(wa + ": need max > min, count >= 3");
    sc.offline.axes.push_back(ax);
  }
  sc.offline.t_off = Num(o, "t_off", sc.offline.t_off, w);
  sc.offline.cfl = Num(o, "cfl", sc.offline.cfl, w);
  sc.offline.accuracy = Int(o, "accuracy", sc.offline.accuracy, w);
  sc.offline.save_interval = Num(o, "save_interval", sc.offline.save_interval, w);
  sc.offline.output = Str(o, "output", sc.name + ".wtvf", w);
}

void ParseOnline(const json& o, Scenario& sc) {
  const std::string w = "online";
  AllowKeys(o, {"mode", "T_run", "T_prime", "tau", "control_period", "T_s", "s0", "sensor_range",
                "seed", "disturbance_hold", "obstacles", "goals", "planning", "replan", "level",
                "reinit"},
            w);
  OnlineConfig on;
  const std::string mode = Str(o, "mode", "timevarying", w);
  if (mode == "periodic") on.periodic = true;
  else if (mode != "timevarying") throw ConfigError("online.mode: expected timevarying or periodic");
  on.T_run = Num(o, "T_run", on.T_run, w);
  on.T_prime = Num(o, "T_prime", on.T_prime, w);
  on.tau = Num(o, "tau", on.tau, w);
  on.control_period = Num(o, "control_period", on.control_period, w);
  on.T_s = Num(o, "T_s", on.T_s, w);
  if (!o.contains("s0") || !o.at("s0").is_array()) throw ConfigError("online.s0: expected an array");
  on.s0.resize(static_cast<Eigen::Index>(o.at("s0").size()));
  for (std::size_t i = 0; i < o.at("s0").size(); ++i) {
    if (!o.at("s0")[i].is_number()) throw ConfigError("online.s0: expected numbers");
    on.s0[static_cast<Eigen::Index>(i)] = o.at("s0")[i].get<double>();
  }
  on.sensor_range = Num(o, "sensor_range", on.sensor_range, w);
  if (o.contains("seed")) {
    const json& seed = o.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
      throw ConfigError("online.seed: expected an unsigned integer");
    on.seed = o.at("seed").get<std::uint64_t>();
  }
  on.disturbance_hold = Num(o, "disturbance_hold", on.disturbance_hold, w);
  on.obstacles = ParseRects(o, "obstacles", w);
  on.goals = ParseRects(o, "goals", w);
  if (on.goals.empty()) throw ConfigError("online.goals: at least one goal is required");

  if (o.contains("planning")) {
    const json& p = o.at("planning");
    const std::string wp = "online.planning";
    AllowKeys(p, {"resolution", "padding", "goal_required", "Q", "R"}, wp);
    on.resolution = Num(p, "resolution", on.resolution, wp);
    on.padding = Num(p, "padding", on.padding, wp);
    on.goal_required = Bool(p, "goal_required", on.goal_required, wp);
    on.Q = ParseDiag(p, "Q", on.Q, wp);
    on.R = ParseDiag(p, "R", on.R, wp);
  }
  if (o.contains("replan")) {
    const json& r = o.at("replan");
    const std::string wr = "online.replan";
    AllowKeys(r, {"fixed_period", "region", "on_goal_hit"}, wr);
    if (r.contains("fixed_period")) on.replan.fixed_period = Num(r, "fixed_period", 0.0, wr);
    if (r.contains("region")) on.replan.region_trigger = ParseRegion(r.at("region"), wr + ".region");
    on.replan.on_goal_hit = Bool(r, "on_goal_hit", false, wr);
  }
  if (on.periodic) on.replan.horizon_expiry = on.T_prime;
  if (o.contains("level")) {
    const json& l = o.at("level");
    const std::string wl = "online.level";
    AllowKeys(l, {"mode", "c", "c_low", "c_high", "region"}, wl);
    const std::string m = Str(l, "mode", "initial_floor", wl);
    if (m == "fixed") {
      on.level.mode = LevelPolicy::Mode::kFixed;
      on.level.c = NumRequired(l, "c", wl);
    } else if (m == "initial_floor") {
      on.level.mode = LevelPolicy::Mode::kInitialFloor;
    } else if (m == "floor") {
      on.level.mode = LevelPolicy::Mode::kFloor;
    } else if (m == "region_switch") {
      on.level.mode = LevelPolicy::Mode::kRegionSwitch;
      if (l.contains("c_low")) on.level.c_low = Num(l, "c_low", 0.0, wl);
      on.level.c_high = NumRequired(l, "c_high", wl);
      if (!l.contains("region")) throw ConfigError(wl + ": region_switch needs a region");
      on.level.region = ParseRegion(l.at("region"), wl + ".region");
    } else {
      throw ConfigError(wl + ".mode: expected fixed, initial_floor, floor or region_switch");
    }
  }
  if (o.contains("reinit")) {
    const json& r = o.at("reinit");
    AllowKeys(r, {"mode"}, "online.reinit");
    const std::string m = Str(r, "mode", "continue_previous", "online.reinit");
    if (m == "continue_previous") on.reinit.mode = ReinitPolicy::Mode::kContinuePrevious;
    else if (m == "teleport_closest_to_goal") on.reinit.mode = ReinitPolicy::Mode::kTeleportClosestToGoal;
    else throw ConfigError("online.reinit.mode: expected continue_previous or teleport_closest_to_goal");
  }

  if (!(on.T_run >= 0) || !(on.control_period > 0) || !(on.T_s > 0) || !(on.resolution > 0) ||
      !(on.sensor_range >= 0) || !(on.disturbance_hold > 0) || !(on.padding >= 0))
    throw ConfigError("online: durations, resolution and ranges must be positive");
  if (on.periodic && !(on.T_prime > 0 && on.tau > 0))
    throw ConfigError("online: periodic mode needs positive T_prime and tau");
  sc.online = on;
}

void CheckOnlineAgainstModel(const Scenario& sc) {
  if (!sc.online) return;
  const OnlineConfig& on = *sc.online;
  if (sc.model_case != ModelCase::kCase2 && sc.model_case != ModelCase::kCase3)
    throw ConfigError("online: closed-loop runs support the case2 and case3 models");
  if (on.s0.size() != 4) throw ConfigError("online.s0: expected (x, z, u_r, w_r)");
  const Region2D& ws = sc.workspace;
  if (!ws.Contains(on.s0[0], on.s0[1])) throw ConfigError("online.s0: position outside the workspace");
  for (const Rect& r : on.obstacles) {
    if (r.Contains(on.s0[0], on.s0[1])) throw ConfigError("online.s0: position inside an obstacle");
  }
  for (const Rect& g : on.goals) {
    if (g.x_min < ws.x_min || g.x_max > ws.x_max || g.z_min < ws.z_min || g.z_max > ws.z_max)
      throw ConfigError("online.goals: goal outside the workspace");
  }
  if (on.replan.region_trigger && on.replan.region_trigger->axis >= 4)
    throw ConfigError("online.replan.region.axis: out of range");
}

}  // namespace

Scenario ParseScenario(const json& doc, const std::filesystem::path& base_dir) {
  AllowKeys(doc, {"name", "description", "model", "offline", "online"}, "scenario");
  Scenario sc;
  sc.source = doc;
  sc.base_dir = base_dir;
  sc.name = Str(doc, "name", "scenario", "scenario");
  if (!doc.contains("model")) throw ConfigError("scenario: missing 'model'");
  if (!doc.contains("offline")) throw ConfigError("scenario: missing 'offline'");
  ParseModel(doc.at("model"), sc);
  ParseOffline(doc.at("offline"), sc);
  if (doc.contains("online")) ParseOnline(doc.at("online"), sc);

  try {
    sc.auv.Validate();
    sc.wave.Validate();
    sc.game.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  const int dims = static_cast<int>(sc.offline.axes.size());
  const int expected = sc.model_case == ModelCase::kAnalytic1D ? 1
                       : sc.model_case == ModelCase::kCase1   ? 6
                                                              : 4;
  if (dims != expected)
    throw ConfigError("offline.grid: expected " + std::to_string(expected) + " axes for this model");
  if (!(sc.offline.t_off > 0) || !(sc.offline.cfl > 0) || sc.offline.cfl > 1 ||
      (sc.offline.accuracy != 1 && sc.offline.accuracy != 2) || sc.offline.save_interval < 0)
    throw ConfigError("offline: need t_off > 0, 0 < cfl <= 1, accuracy 1 or 2, save_interval >= 0");
  if (sc.model_case == ModelCase::kAnalytic1D) sc.game.t_off = sc.offline.t_off;
  if (!doc.at("model").contains("envelope") || !doc.at("model").at("envelope").contains("horizon"))
    sc.envelope_horizon = sc.offline.t_off;
  CheckOnlineAgainstModel(sc);
  return sc;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  return ParseScenario(doc, path.parent_path());
}

std::string Scenario::ModelHash() const {
  json key = {{"model", source.at("model")}, {"offline", source.at("offline")}};
  key["offline"].erase("output");
  return sha256_hex(key.dump());
}

std::filesystem::path Scenario::OutputPath() const {
  const std::filesystem::path p(offline.output);
  return p.is_absolute() ? p : base_dir / p;
}

std::shared_ptr<RelativeSystem> MakeScenarioSystem(const Scenario& sc) {
  switch (sc.model_case) {
    case ModelCase::kAnalytic1D:
      return std::make_shared<RelativeSystem>(make_1d_game(sc.game));
    case ModelCase::kCase1:
      return std::make_shared<RelativeSystem>(make_case1(sc.auv, sc.wave, sc.bounds));
    case ModelCase::kCase2: {
      const Case2WaveEnvelope env =
          sc.envelope ? *sc.envelope : fit_case2_envelope(sc.wave, sc.workspace, sc.envelope_horizon);
      return std::make_shared<RelativeSystem>(make_case2(sc.auv, sc.wave, env, sc.bounds));
    }
    case ModelCase::kCase3: {
      const Case3WaveBounds b =
          sc.case3_bounds ? *sc.case3_bounds : fit_case3_bounds(sc.wave, sc.workspace, sc.envelope_horizon);
      return std::make_shared<RelativeSystem>(make_case3(sc.auv, b, sc.bounds));
    }
  }
  throw ConfigError("unknown model case");
}

HJIProblem MakeScenarioProblem(const Scenario& sc) {
  HJIProblem p;
  p.system = MakeScenarioSystem(sc);
  p.grid = Grid(sc.offline.axes);
  p.t_off = sc.offline.t_off;
  p.cfl = sc.offline.cfl;
  p.accuracy = sc.offline.accuracy;
  p.save_interval = sc.offline.save_interval;
  return p;
}

std::filesystem::path SidecarPath(const std::filesystem::path& wtvf) {
  std::filesystem::path p = wtvf;
  p += ".json";
  return p;
}

std::string FileSha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void WriteSidecar(const std::filesystem::path& wtvf, const ValueFunctionMeta& meta) {
  json j = meta.extra;
  j["model_hash"] = meta.model_hash;
  j["content_hash"] = meta.content_hash;
  std::ofstream out(SidecarPath(wtvf));
  if (!out) throw std::runtime_error("cannot write " + SidecarPath(wtvf).string());
  out << j.dump(2) << '\n';
}

ValueFunctionMeta ReadSidecar(const std::filesystem::path& wtvf) {
  std::ifstream in(SidecarPath(wtvf));
  if (!in) throw std::runtime_error("missing metadata " + SidecarPath(wtvf).string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("metadata " + SidecarPath(wtvf).string() + ": " + e.what());
  }
  ValueFunctionMeta meta;
  meta.model_hash = j.value("model_hash", "");
  meta.content_hash = j.value("content_hash", "");
  meta.extra = j;
  return meta;
}

}  // namespace wavetrack
