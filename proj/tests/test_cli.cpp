#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& Dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "wavetrack_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    fs::copy_file(fs::path(WAVETRACK_FIXTURE_DIR) / "coarse.json", d / "coarse.json");
    return d;
  }();
  return dir;
}

// Exit status of the CLI; stdout goes to out.txt in the work directory.
int Cli(const std::string& args) {
  const std::string cmd = std::string("\"") + WAVETRACK_CLI + "\" " + args + " > \"" +
                          (Dir() / "out.txt").string() + "\" 2> \"" +
                          (Dir() / "err.txt").string() + "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Path(const std::string& name) { return "\"" + (Dir() / name).string() + "\""; }

void WriteJson(const std::string& name, const json& j) { std::ofstream(Dir() / name) << j.dump(2); }

// Solve once for every test case that needs a value function.
void EnsureSolved() {
  static const int rc = Cli("solve " + Path("coarse.json") + " --quiet");
  REQUIRE(rc == 0);
}

}  // namespace

TEST_CASE("solve writes the value function and its metadata", "[cli]") {
  EnsureSolved();
  CHECK(fs::exists(Dir() / "coarse.wtvf"));
  const json meta = json::parse(Slurp(Dir() / "coarse.wtvf.json"));
  CHECK(meta.at("model_hash").get<std::string>().size() == 64);
  CHECK(meta.at("dims") == 4);
}

TEST_CASE("simulate writes logs and a summary", "[cli]") {
  EnsureSolved();
  REQUIRE(Cli("simulate " + Path("coarse.json") + " --out-dir " + Path("run")) == 0);
  const json summary = json::parse(Slurp(Dir() / "out.txt"));
  CHECK(summary.contains("outcome"));
  CHECK(fs::exists(Dir() / "run" / "traces.csv"));
  CHECK(fs::exists(Dir() / "run" / "events.jsonl"));
  CHECK(fs::exists(Dir() / "run" / "snapshots" / "replan_000.json"));
  const std::string hash = summary.at("content_hash");
  REQUIRE(Cli("simulate " + Path("coarse.json")) == 0);
  CHECK(json::parse(Slurp(Dir() / "out.txt")).at("content_hash") == hash);
  REQUIRE(Cli("simulate " + Path("coarse.json") + " --seed 8") == 0);
  CHECK(json::parse(Slurp(Dir() / "out.txt")).at("content_hash") != hash);
}

TEST_CASE("plan and export", "[cli]") {
  EnsureSolved();
  REQUIRE(Cli("plan " + Path("coarse.json") + " --level 0.35 --out " + Path("plan.csv")) == 0);
  const json summary = json::parse(Slurp(Dir() / "out.txt"));
  CHECK(summary.at("feasible") == true);
  CHECK(Slurp(Dir() / "plan.csv").rfind("t,x_p,z_p,u_x,u_z", 0) == 0);
  CHECK(Cli("plan " + Path("coarse.json") + " --state 1,2") == 2);

  REQUIRE(Cli("export " + Path("coarse.json") + " --level 0.35 --out " + Path("teb.json")) == 0);
  const json teb = json::parse(Slurp(Dir() / "teb.json"));
  CHECK(teb.at("teb_radius").get<double>() >= 0.0);
  CHECK_FALSE(teb.at("value_at_zero_velocity").empty());
}

TEST_CASE("selfcheck passes", "[cli]") {
  EnsureSolved();
  CHECK(Cli("selfcheck") == 0);
  CHECK(Slurp(Dir() / "out.txt").find("FAIL") == std::string::npos);
  CHECK(Cli("selfcheck --value-fn " + Path("coarse.wtvf")) == 0);
}

TEST_CASE("configuration errors exit with 2", "[cli]") {
  std::ofstream(Dir() / "broken.json") << "{ \"name\": ";
  CHECK(Cli("solve " + Path("broken.json")) == 2);
  json doc = json::parse(Slurp(Dir() / "coarse.json"));
  doc["offline"]["typo"] = 1;
  WriteJson("typo.json", doc);
  CHECK(Cli("solve " + Path("typo.json")) == 2);
  CHECK(Slurp(Dir() / "err.txt").find("typo") != std::string::npos);
  CHECK(Cli("") == 2);
  CHECK(Cli("solve") == 2);
  CHECK(Cli("--help") == 0);
}

TEST_CASE("mismatched value functions exit with 5", "[cli]") {
  EnsureSolved();
  json doc = json::parse(Slurp(Dir() / "coarse.json"));
  doc["offline"]["t_off"] = 2.5;
  doc["online"]["T_run"] = 2.5;
  WriteJson("other_model.json", doc);
  CHECK(Cli("simulate " + Path("other_model.json")) == 5);

  fs::copy_file(Dir() / "coarse.wtvf", Dir() / "tampered.wtvf", fs::copy_options::overwrite_existing);
  fs::copy_file(Dir() / "coarse.wtvf.json", Dir() / "tampered.wtvf.json",
                fs::copy_options::overwrite_existing);
  std::ofstream(Dir() / "tampered.wtvf", std::ios::app | std::ios::binary) << 'x';
  CHECK(Cli("simulate " + Path("coarse.json") + " --value-fn " + Path("tampered.wtvf")) == 5);
}

TEST_CASE("missing value function exits with 4", "[cli]") {
  CHECK(Cli("simulate " + Path("coarse.json") + " --value-fn " + Path("absent.wtvf")) == 4);
}
