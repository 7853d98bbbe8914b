#include "wavetrack/simlog.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wavetrack/hash.hpp"

namespace wavetrack {

namespace {

void AppendNumber(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

nlohmann::json Points(const std::vector<Eigen::Vector2d>& pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

nlohmann::json Raster(const OccupancyGrid2D& g) {
  std::vector<std::string> rows;
  for (int j = g.nz() - 1; j >= 0; --j) {
    std::string row(g.nx(), '0');
    for (int i = 0; i < g.nx(); ++i) row[i] = g.at(i, j) ? '1' : '0';
    rows.push_back(std::move(row));
  }
  return {{"x_min", g.x_min()},
          {"z_min", g.z_min()},
          {"resolution", g.resolution()},
          {"nx", g.nx()},
          {"nz", g.nz()},
          {"rows_top_down", rows}};
}

std::ofstream OpenOut(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void SimLog::WriteTraces(std::ostream& out) const {
  std::string text;
  const std::size_t ns = traces.empty() ? 0 : traces.front().s.size();
  const std::size_t nu = traces.empty() ? 0 : traces.front().u_s.size();
  const std::size_t nd = traces.empty() ? 0 : traces.front().d_nom.size();
  text += "t,t_c";
  for (std::size_t i = 0; i < ns; ++i) text += ",s" + std::to_string(i);
  text += ",ref_x,ref_z";
  for (std::size_t i = 0; i < nu; ++i) text += ",u" + std::to_string(i);
  for (std::size_t i = 0; i < nd; ++i) text += ",d" + std::to_string(i);
  text += ",value,level\n";
  for (const TraceRow& r : traces) {
    AppendNumber(text, r.t);
    text += ',';
    AppendNumber(text, r.t_c);
    for (Eigen::Index i = 0; i < r.s.size(); ++i) {
      text += ',';
      AppendNumber(text, r.s[i]);
    }
    for (int i = 0; i < 2; ++i) {
      text += ',';
      AppendNumber(text, r.ref[i]);
    }
    for (Eigen::Index i = 0; i < r.u_s.size(); ++i) {
      text += ',';
      AppendNumber(text, r.u_s[i]);
    }
    for (Eigen::Index i = 0; i < r.d_nom.size(); ++i) {
      text += ',';
      AppendNumber(text, r.d_nom[i]);
    }
    text += ',';
    AppendNumber(text, r.value);
    text += ',';
    AppendNumber(text, r.level);
    text += '\n';
  }
  out << text;
}

void SimLog::WriteEvents(std::ostream& out) const {
  for (const SimEvent& e : events) {
    nlohmann::json line = {{"t", e.t}, {"type", e.type}, {"data", e.data}};
    out << line.dump() << '\n';
  }
}

nlohmann::json SimLog::Summary() const {
  nlohmann::json s = {{"outcome", outcome},
                      {"goals_reached", goals_reached},
                      {"replans", replans.size()},
                      {"content_hash", ContentHash()}};
  s["goal_time"] = goal_time ? nlohmann::json(*goal_time) : nlohmann::json(nullptr);
  double worst = -std::numeric_limits<double>::infinity();
  for (const TraceRow& r : traces) worst = std::max(worst, r.value - r.level);
  if (!traces.empty()) s["max_value_minus_level"] = worst;
  return s;
}

std::string SimLog::ContentHash() const {
  std::ostringstream buf;
  buf << config.dump() << '\n';
  WriteTraces(buf);
  WriteEvents(buf);
  return sha256_hex(buf.str());
}

void SimLog::WriteAll(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir / "snapshots");
  {
    auto out = OpenOut(dir / "traces.csv");
    WriteTraces(out);
  }
  {
    auto out = OpenOut(dir / "events.jsonl");
    WriteEvents(out);
  }
  OpenOut(dir / "config.json") << config.dump(2) << '\n';
  OpenOut(dir / "summary.json") << Summary().dump(2) << '\n';
  for (const ReplanRecord& rec : replans) {
    const double shift = rec.t_k - rec.t_i;
    std::vector<double> plan_t;
    for (double t : rec.plan.times) plan_t.push_back(t + shift);
    nlohmann::json snap = {{"k", rec.k},
                           {"t_k", rec.t_k},
                           {"t_i", rec.t_i},
                           {"t_f", rec.t_f},
                           {"level", rec.level},
                           {"p_k", {rec.p_k.x(), rec.p_k.y()}},
                           {"plan_times", plan_t},
                           {"plan_states", Points(rec.plan.states)},
                           {"path_so_far", Points(rec.path_so_far)},
                           {"known_obstacles", Raster(rec.known_obstacles)},
                           {"planner_obstacles", Raster(rec.planner_obstacles)},
                           {"planner_goal", Raster(rec.planner_goal)}};
    char name[32];
    std::snprintf(name, sizeof name, "replan_%03d.json", rec.k);
    OpenOut(dir / "snapshots" / name) << snap.dump() << '\n';
  }
}

std::vector<const SimEvent*> SimLog::EventsOfType(const std::string& type) const {
  std::vector<const SimEvent*> out;
  for (const SimEvent& e : events) {
    if (e.type == type) out.push_back(&e);
  }
  return out;
}

}  // namespace wavetrack
