#pragma once

#include "mct/dqn.hpp"
#include "mct/gp.hpp"
#include "mct/mpc.hpp"
#include "mct/plant.hpp"
#include "mct/power.hpp"
#include "mct/sim.hpp"

#include <iosfwd>
#include <string>

namespace mct {

struct PlantConfig {
  std::string source = "reference";  // reference | file
  std::string path;
  double torque_bound = -1.0;  // N*m deviation cap; <0 means 0.2*|tau_eq|
};

struct EnvironmentConfig {
  std::string source = "synthetic";  // synthetic | csv | gp
  std::string kind = "high";
  unsigned seed = 1;
  std::string csv_path;
  GpHyperParams gp;
  int gp_grid_cap = 4096;
  int gp_subsample_depth = 2;     // observation thinning for the GP fit
  int gp_subsample_time = 8;
  double gp_sample_time_step = 600.0;  // realization grid spacing, s
};

struct TrackerConfig {
  MpcHorizons horizons;
  double q_depth = 1.0;
  double q_term = 1.0;
  double r_move = 1.0;
  bool slew_in_percent = true;
  double tolerance = 1e-8;
  double y_min = -std::numeric_limits<double>::infinity();
  double y_max = std::numeric_limits<double>::infinity();
};

struct SimulationSection {
  double T_s = 2.0;
  double duration = 86400.0;
  double z_eq = 50.0;
  double euler_bound_deg = 6.0;
  unsigned seed = 1;
};

struct GlobalConfig {
  PlantConfig plant;
  EnvironmentConfig environment;
  PowerParams power = PowerParams::reference();
  TrainingConfig planner;
  std::string planner_net_path;
  TrackerConfig tracker;
  SimulationSection simulation;
};

// Parses the nested JSON configuration; unknown keys are rejected with the
// offending path in the message. `path` of "-" reads standard input.
GlobalConfig load_config(const std::string& path);
GlobalConfig parse_config(std::istream& in, const std::string& label);
GlobalConfig default_config();

// Resolved pieces shared by the CLI stages.
ContinuousLinearModel build_plant(const GlobalConfig& cfg);
InputBounds build_bounds(const GlobalConfig& cfg, const ContinuousLinearModel& model);

struct EnvironmentBundle {
  CurrentField truth;
  SpeedLookup forecast;  // empty lookup = use the truth field
};
EnvironmentBundle build_environment(const GlobalConfig& cfg);

SimulationSetup build_setup(const GlobalConfig& cfg, std::optional<TrainedPlanner> planner);

}  // namespace mct
