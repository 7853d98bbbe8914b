#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavetrack/dynamics.hpp"
#include "wavetrack/grid.hpp"
#include "wavetrack/hj_solver.hpp"
#include "wavetrack/occupancy.hpp"
#include "wavetrack/oracles.hpp"
#include "wavetrack/replanner.hpp"

namespace wavetrack {

// Malformed or semantically invalid scenario document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelCase { kAnalytic1D, kCase1, kCase2, kCase3 };

struct OfflineConfig {
  std::vector<Axis> axes;
  double t_off = 10.0;
  double cfl = 0.5;
  int accuracy = 1;
  double save_interval = 0.1;
  std::string output;  // relative to the scenario file
};

struct OnlineConfig {
  bool periodic = false;
  double T_run = 8.0;
  double T_prime = 4.0;
  double tau = 10.0;
  double control_period = 0.02;
  double T_s = 0.2;
  Eigen::VectorXd s0;
  double sensor_range = 1.2;
  std::uint64_t seed = 1;
  double disturbance_hold = 0.2;
  std::vector<Rect> obstacles;
  std::vector<Rect> goals;
  double resolution = 0.05;
  double padding = 1.5;  // planning raster extends this far past the workspace
  bool goal_required = true;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R = 0.01 * Eigen::Matrix2d::Identity();
  ReplanPolicy replan;
  LevelPolicy level;
  ReinitPolicy reinit;
};

struct Scenario {
  std::string name;
  ModelCase model_case = ModelCase::kCase2;
  AuvParams auv;
  WaveParams wave;
  AuvBounds bounds;
  Region2D workspace{-2, 2, 2, 6};
  double envelope_horizon = 10.0;
  std::optional<Case2WaveEnvelope> envelope;  // fitted when unset
  std::optional<Case3WaveBounds> case3_bounds;
  Analytic1DGame game;
  OfflineConfig offline;
  std::optional<OnlineConfig> online;

  nlohmann::json source;  // the parsed document, echoed into logs
  std::filesystem::path base_dir;

  // Hash of everything that determines the value function.
  std::string ModelHash() const;
  std::filesystem::path OutputPath() const;
};

Scenario ParseScenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario LoadScenario(const std::filesystem::path& path);

// Relative system for the scenario's offline model.
std::shared_ptr<RelativeSystem> MakeScenarioSystem(const Scenario& sc);
HJIProblem MakeScenarioProblem(const Scenario& sc);

// Value-function sidecar: <file>.json next to the WTVF file.
struct ValueFunctionMeta {
  std::string model_hash;
  std::string content_hash;
  nlohmann::json extra = nlohmann::json::object();
};
std::filesystem::path SidecarPath(const std::filesystem::path& wtvf);
void WriteSidecar(const std::filesystem::path& wtvf, const ValueFunctionMeta& meta);
ValueFunctionMeta ReadSidecar(const std::filesystem::path& wtvf);
std::string FileSha256(const std::filesystem::path& path);

}  // namespace wavetrack
