#include "mct/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mct {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) {
    throw std::runtime_error("config: section '" + where + "' must be a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (allowed.find(it.key()) == allowed.end()) {
      throw std::runtime_error("config: unknown key '" + where + "." + it.key() + "'");
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_plant(const json& j, PlantConfig& p) {
  reject_unknown(j, {"source", "path", "torque_bound"}, "plant");
  get_if(j, "source", p.source);
  get_if(j, "path", p.path);
  get_if(j, "torque_bound", p.torque_bound);
  if (p.source != "reference" && p.source != "file") {
    throw std::runtime_error("config: plant.source must be 'reference' or 'file'");
  }
}

void parse_environment(const json& j, EnvironmentConfig& e) {
  reject_unknown(j,
                 {"source", "kind", "seed", "csv_path", "gp", "gp_grid_cap", "gp_subsample_depth",
                  "gp_subsample_time", "gp_sample_time_step"},
                 "environment");
  get_if(j, "source", e.source);
  get_if(j, "kind", e.kind);
  get_if(j, "seed", e.seed);
  get_if(j, "csv_path", e.csv_path);
  get_if(j, "gp_grid_cap", e.gp_grid_cap);
  get_if(j, "gp_subsample_depth", e.gp_subsample_depth);
  get_if(j, "gp_subsample_time", e.gp_subsample_time);
  get_if(j, "gp_sample_time_step", e.gp_sample_time_step);
  if (j.contains("gp")) {
    const json& g = j.at("gp");
    reject_unknown(g, {"signal_std", "length_depth_m", "length_time_s", "noise_std"},
                   "environment.gp");
    get_if(g, "signal_std", e.gp.signal_std);
    get_if(g, "length_depth_m", e.gp.length_depth);
    get_if(g, "length_time_s", e.gp.length_time);
    get_if(g, "noise_std", e.gp.noise_std);
  }
  if (e.source != "synthetic" && e.source != "csv" && e.source != "gp") {
    throw std::runtime_error("config: environment.source must be synthetic, csv or gp");
  }
}

void parse_power(const json& j, PowerParams& p) {
  reject_unknown(j, {"rho", "rotor_area", "c_p", "zeta1", "zeta2", "T_p"}, "power");
  get_if(j, "rho", p.rho);
  get_if(j, "rotor_area", p.rotor_area);
  get_if(j, "c_p", p.c_p);
  get_if(j, "zeta1", p.zeta1);
  get_if(j, "zeta2", p.zeta2);
  get_if(j, "T_p", p.T_p);
  p.validate();
}

void parse_planner(const json& j, TrainingConfig& p, std::string& net_path) {
  reject_unknown(j,
                 {"gamma", "eps_min", "eps_max", "decay", "alpha", "wrong_move_penalty", "batch",
                  "buffer", "hidden", "learning_rate", "sync_every", "episodes", "horizon", "seed",
                  "actions", "z_min", "z_max", "net_path"},
                 "planner");
  get_if(j, "gamma", p.gamma);
  get_if(j, "eps_min", p.eps_min);
  get_if(j, "eps_max", p.eps_max);
  get_if(j, "decay", p.decay);
  get_if(j, "alpha", p.alpha);
  get_if(j, "wrong_move_penalty", p.wrong_move_penalty);
  get_if(j, "batch", p.batch);
  get_if(j, "buffer", p.buffer_capacity);
  get_if(j, "hidden", p.hidden);
  get_if(j, "learning_rate", p.learning_rate);
  get_if(j, "sync_every", p.sync_every);
  get_if(j, "episodes", p.episodes);
  get_if(j, "horizon", p.horizon);
  get_if(j, "seed", p.seed);
  get_if(j, "actions", p.actions);
  get_if(j, "z_min", p.z_min);
  get_if(j, "z_max", p.z_max);
  get_if(j, "net_path", net_path);
  p.validate();
}

void parse_tracker(const json& j, TrackerConfig& t) {
  reject_unknown(j,
                 {"N_t", "N_c", "q_depth", "q_term", "r_move", "slew_in_percent", "tolerance",
                  "y_min", "y_max"},
                 "tracker");
  get_if(j, "N_t", t.horizons.N_t);
  get_if(j, "N_c", t.horizons.N_c);
  get_if(j, "q_depth", t.q_depth);
  get_if(j, "q_term", t.q_term);
  get_if(j, "r_move", t.r_move);
  get_if(j, "slew_in_percent", t.slew_in_percent);
  get_if(j, "tolerance", t.tolerance);
  get_if(j, "y_min", t.y_min);
  get_if(j, "y_max", t.y_max);
}

void parse_simulation(const json& j, SimulationSection& s) {
  reject_unknown(j, {"T_s", "duration_s", "z_eq", "euler_bound_deg", "seed"}, "simulation");
  get_if(j, "T_s", s.T_s);
  get_if(j, "duration_s", s.duration);
  get_if(j, "z_eq", s.z_eq);
  get_if(j, "euler_bound_deg", s.euler_bound_deg);
  get_if(j, "seed", s.seed);
}

}  // namespace

GlobalConfig default_config() { return GlobalConfig{}; }

GlobalConfig parse_config(std::istream& in, const std::string& label) {
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config: " + label + ": " + e.what());
  }
  reject_unknown(j, {"plant", "environment", "power", "planner", "tracker", "simulation"},
                 "<root>");
  GlobalConfig cfg;
  if (j.contains("plant")) parse_plant(j.at("plant"), cfg.plant);
  if (j.contains("environment")) parse_environment(j.at("environment"), cfg.environment);
  if (j.contains("power")) parse_power(j.at("power"), cfg.power);
  if (j.contains("planner")) parse_planner(j.at("planner"), cfg.planner, cfg.planner_net_path);
  if (j.contains("tracker")) parse_tracker(j.at("tracker"), cfg.tracker);
  if (j.contains("simulation")) parse_simulation(j.at("simulation"), cfg.simulation);
  return cfg;
}

GlobalConfig load_config(const std::string& path) {
  if (path == "-") return parse_config(std::cin, "<stdin>");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  return parse_config(in, path);
}

ContinuousLinearModel build_plant(const GlobalConfig& cfg) {
  if (cfg.plant.source == "file") {
    if (cfg.plant.path.empty()) throw std::runtime_error("config: plant.path is required");
    return load_model(cfg.plant.path);
  }
  return build_reference_model();
}

InputBounds build_bounds(const GlobalConfig& cfg, const ContinuousLinearModel& model) {
  InputBounds b = InputBounds::reference(model.equilibrium);
  if (cfg.plant.torque_bound > 0.0) {
    b.u_min(input::torque) = -cfg.plant.torque_bound;
    b.u_max(input::torque) = cfg.plant.torque_bound;
  }
  return b;
}

EnvironmentBundle build_environment(const GlobalConfig& cfg) {
  const EnvironmentConfig& e = cfg.environment;
  EnvironmentBundle bundle;

  CurrentField base;
  if (e.source == "csv" || (e.source == "gp" && !e.csv_path.empty())) {
    if (e.csv_path.empty()) throw std::runtime_error("config: environment.csv_path is required");
    base = load_adcp_csv(e.csv_path);
  } else {
    base = synthesize_shear_profile(parse_shear_kind(e.kind), cfg.simulation.duration, e.seed);
  }

  if (e.source != "gp") {
    bundle.truth = std::move(base);
    return bundle;
  }

  // GP mode: fit to thinned observations, draw one realization as the truth,
  // hand the posterior mean to the planner as its forecast.
  std::vector<CurrentObservation> obs;
  for (Eigen::Index j = 0; j < base.times.size(); j += e.gp_subsample_time) {
    for (Eigen::Index i = 0; i < base.depths.size(); i += e.gp_subsample_depth) {
      obs.push_back({base.times(j), base.depths(i), base.speed(i, j)});
    }
  }
  auto gp = std::make_shared<GpModel>(gp_fit(std::move(obs), e.gp));

  const int nt = static_cast<int>(std::floor(cfg.simulation.duration / e.gp_sample_time_step)) + 1;
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(nt, 0.0, e.gp_sample_time_step * (nt - 1));
  bundle.truth = gp->sample_realization(base.depths, times, e.seed, e.gp_grid_cap);
  bundle.forecast = [gp](double z, double t) { return gp->predict(z, t).mean; };
  return bundle;
}

SimulationSetup build_setup(const GlobalConfig& cfg, std::optional<TrainedPlanner> planner) {
  SimulationSetup setup;
  const ContinuousLinearModel plant = build_plant(cfg);
  setup.model = discretize(plant, cfg.simulation.T_s);
  setup.bounds = build_bounds(cfg, plant);

  setup.weights = MpcWeights::reference();
  setup.weights.Q_part(state::depth, state::depth) = cfg.tracker.q_depth;
  setup.weights.q_term = cfg.tracker.q_term;
  setup.weights.R_dpart = cfg.tracker.r_move * InputWeight::Identity();
  setup.constraints =
      MpcConstraints::reference(setup.bounds, cfg.simulation.T_s, cfg.tracker.slew_in_percent);
  setup.constraints.y_min = cfg.tracker.y_min;
  setup.constraints.y_max = cfg.tracker.y_max;
  setup.horizons = cfg.tracker.horizons;
  setup.qp_tolerance = cfg.tracker.tolerance;

  setup.power = cfg.power;
  EnvironmentBundle env = build_environment(cfg);
  setup.truth = std::move(env.truth);
  setup.forecast = std::move(env.forecast);
  setup.planner = std::move(planner);

  setup.T_s = cfg.simulation.T_s;
  setup.T_p = cfg.power.T_p;
  setup.duration = cfg.simulation.duration;
  setup.z_eq = cfg.simulation.z_eq;
  setup.euler_bound_deg = cfg.simulation.euler_bound_deg;
  return setup;
}

}  // namespace mct
