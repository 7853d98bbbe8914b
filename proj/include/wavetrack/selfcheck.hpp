#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wavetrack {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  int hamiltonian_density = 21;
  int hamiltonian_probes = 100;
  int envelope_samples = 10000;
  // Also verify that this value-function file loads and matches its sidecar.
  std::optional<std::filesystem::path> value_function;
};

// Runs the reference oracles against the library.
std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options = {});

}  // namespace wavetrack
