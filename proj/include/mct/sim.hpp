#pragma once

#include "mct/dqn.hpp"
#include "mct/mpc.hpp"
#include "mct/ocean.hpp"
#include "mct/plant.hpp"
#include "mct/power.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mct {

// Fully resolved inputs for one closed-loop run. `planner` empty means the
// hold-depth baseline (reference fixed at z_eq).
struct SimulationSetup {
  DiscreteLinearModel model;
  InputBounds bounds;
  MpcWeights weights;
  MpcConstraints constraints;
  MpcHorizons horizons;
  PowerParams power;
  CurrentField truth;                    // realization the harvest accrues on
  SpeedLookup forecast;                  // planner view; empty = truth field
  std::optional<TrainedPlanner> planner;
  double T_s = 2.0;
  double T_p = 300.0;
  double duration = 86400.0;
  double z_eq = 50.0;
  double euler_bound_deg = 6.0;
  double qp_tolerance = 1e-8;

  void validate() const;
};

struct LogRecord {
  double t = 0.0;
  StateVector x;       // deviations
  ControlInput u;      // deviations
  double ref_dev = 0.0;
  double z_abs = 0.0;  // realized absolute depth before this step
  PowerBreakdown power;
  double kkt_residual = 0.0;
  int qp_iterations = 0;
};

struct SimulationLog {
  double T_s = 0.0;
  double z_eq = 0.0;
  EquilibriumPoint eq;  // for absolute quantities in exported logs
  std::vector<LogRecord> records;
  std::vector<double> waypoints;  // absolute depths, one per planning period
};

struct Metrics {
  double energy = 0.0;             // J, sum of net power * T_s
  double rmse = 0.0;               // m, realized depth vs reference
  double max_euler_dev_deg = 0.0;  // deviation from equilibrium angles
  long violations = 0;             // input bound/slew breaches (tracker tolerance)
  double duration = 0.0;           // s
};

struct SimulationResult {
  SimulationLog log;
  Metrics metrics;
};

// Zero-order-hold expansion: each waypoint repeated T_p / T_s times.
Eigen::VectorXd waypoints_to_reference(const Eigen::VectorXd& waypoints, double T_p, double T_s);

// Planner-in-the-loop episode: a fresh waypoint at every T_p boundary from the
// realized depth, MPC tracking at every T_s, power accrued on the truth field.
SimulationResult run_episode(const SimulationSetup& setup);

// Same loop with the reference pinned at z_eq and no planner.
SimulationResult run_baseline(const SimulationSetup& setup);

struct CompareReport {
  double gain_percent = 0.0;
  Metrics planned;
  Metrics baseline;
};

// Percentage energy gain of the planned run over the baseline; requires equal
// durations (paired environments).
CompareReport compare(const Metrics& planned, const Metrics& baseline);

void write_log_csv(const SimulationLog& log, const std::string& path);
void write_metrics_json(const Metrics& metrics, const std::string& path);
void write_compare_json(const CompareReport& report, const std::string& path);
void write_simulation_plots(const SimulationLog& log, const std::string& out_dir);

}  // namespace mct
