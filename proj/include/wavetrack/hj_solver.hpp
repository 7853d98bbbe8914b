#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>

#include "wavetrack/dynamics.hpp"
#include "wavetrack/grid.hpp"
#include "wavetrack/value_function.hpp"

namespace wavetrack {

struct HJIProblem {
  std::shared_ptr<const RelativeSystem> system;
  Grid grid;
  double t_off = 1.0;
  double cfl = 0.5;
  int accuracy = 1;            // 1: first-order one-sided, 2: ENO2 differences
  double save_interval = 0.0;  // 0 stores every accepted step

  void Validate() const;
};

struct SolveStats {
  int steps = 0;
  int cfl_retries = 0;
  double min_dt = 0.0;
  double max_dt = 0.0;
  double seconds = 0.0;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using SolveProgress = std::function<void(double t)>;

// Backward integration of the HJI variational inequality from T_off to 0.
ValueFunction solve(const HJIProblem& problem, SolveStats* stats = nullptr,
                    const SolveProgress& progress = {});

// min over u_s, max over (u_p, d) of p' g(t, r, u_s, u_p, d), closed form.
double hamiltonian(const RelativeSystem& system, double t, std::span<const double> r,
                   std::span<const double> p);

// Bang-bang tracker input opposing the value gradient; zero gradient -> box center.
Eigen::VectorXd optimal_control(const ValueFunction& V, const RelativeSystem& system,
                                const Eigen::VectorXd& r, double t);

struct AdversaryInput {
  Eigen::VectorXd u_p;
  Eigen::VectorXd d;
};
AdversaryInput worst_adversary(const ValueFunction& V, const RelativeSystem& system,
                               const Eigen::VectorXd& r, double t);

// Worker threads for node-parallel loops (WAVETRACK_THREADS, else hardware).
int SolverThreads();

}  // namespace wavetrack
