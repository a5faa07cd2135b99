#include "mct/config.hpp"
#include "mct/csv.hpp"
#include "mct/dqn.hpp"
#include "mct/gp.hpp"
#include "mct/mpc.hpp"
#include "mct/ocean.hpp"
#include "mct/plant.hpp"
#include "mct/sim.hpp"
#include "mct/svg.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "mct 1.0.0 (C++20, Eigen)";

mct::GlobalConfig load_or_default(const std::string& path) {
  if (path.empty()) return mct::default_config();
  return mct::load_config(path);
}

int cmd_synth_env(const std::string& kind, double duration, unsigned seed,
                  const std::string& out) {
  const auto field =
      mct::synthesize_shear_profile(mct::parse_shear_kind(kind), duration, seed);
  mct::save_field_csv(field, out);
  return 0;
}

int cmd_train_planner(const std::string& config_path, const std::string& out, int episodes_flag,
                      long seed_flag) {
  mct::GlobalConfig cfg = load_or_default(config_path);
  if (episodes_flag > 0) cfg.planner.episodes = episodes_flag;
  if (seed_flag >= 0) cfg.planner.seed = static_cast<unsigned>(seed_flag);

  const double span = cfg.planner.horizon * cfg.power.T_p;
  mct::EpisodeSampler sampler;
  if (cfg.environment.source == "csv") {
    sampler = mct::fixed_field_sampler(mct::load_adcp_csv(cfg.environment.csv_path));
  } else {
    sampler = mct::shear_family_sampler(mct::parse_shear_kind(cfg.environment.kind), span,
                                        cfg.environment.seed);
  }
  const auto result = mct::train(sampler, cfg.planner, cfg.power);
  mct::save_planner(result.planner, out);

  std::cerr << "trained " << cfg.planner.episodes << " episodes; final epsilon "
            << result.log.back().epsilon << ", final mean loss " << result.log.back().mean_loss
            << "\n";
  return 0;
}

int cmd_plan(const std::string& net_path, const std::string& field_path, double z0, int horizon,
             const std::string& out) {
  const mct::TrainedPlanner planner = mct::load_planner(net_path);
  const mct::CurrentField field = mct::load_adcp_csv(field_path);
  const mct::SpeedLookup speed = [&field](double z, double t) {
    return field.at(z, std::min(t, field.duration()));
  };
  const Eigen::VectorXd wp = mct::plan_path(planner, speed, z0, horizon, planner.power.T_p);

  std::ofstream os(out);
  if (!os) throw std::runtime_error("plan: cannot open " + out);
  os << "time_s,depth_m\n";
  for (Eigen::Index k = 0; k < wp.size(); ++k) {
    os << mct::format_double((k + 1) * planner.power.T_p) << ',' << mct::format_double(wp(k))
       << '\n';
  }
  return 0;
}

int cmd_track(const std::string& model_path, const std::string& ref_path, const std::string& out,
              double T_s) {
  const mct::ContinuousLinearModel plant = mct::load_model(model_path);
  const mct::DiscreteLinearModel model = mct::discretize(plant, T_s);
  const mct::InputBounds bounds = mct::InputBounds::reference(plant.equilibrium);
  const mct::MpcWeights weights = mct::MpcWeights::reference();
  const mct::MpcConstraints constraints = mct::MpcConstraints::reference(bounds, T_s);
  const mct::MpcHorizons horizons;
  const double z_eq = plant.equilibrium.x_eq(mct::state::depth);

  const mct::CsvTable table = mct::read_csv(ref_path);
  const int ct = table.column("time_s");
  const int cz = table.column("depth_m");
  if (ct < 0 || cz < 0 || table.rows.empty()) {
    throw std::runtime_error("track: reference CSV must have columns time_s,depth_m");
  }

  // zero-order hold of the reference samples onto the T_s grid
  const double t_end = table.rows.back()[ct];
  const long steps = std::max<long>(1, std::lround(t_end / T_s));
  Eigen::VectorXd ref(steps);
  size_t row = 0;
  for (long k = 0; k < steps; ++k) {
    const double t = k * T_s;
    while (row + 1 < table.rows.size() && table.rows[row + 1][ct] <= t) ++row;
    ref(k) = table.rows[row][cz] - z_eq;
  }

  const mct::PredictionMatrices cache = mct::build_prediction(model, horizons);
  mct::StateVector x = mct::StateVector::Zero();
  mct::ControlInput u_prev = mct::ControlInput::Zero();

  std::ofstream os(out);
  if (!os) throw std::runtime_error("track: cannot open " + out);
  os << "time_s,z_m,z_ref_m,Bf,Ba,tau_em,phi_deg,theta_deg,psi_deg,kkt_residual,iters\n";
  const double r2d = 180.0 / M_PI;
  const auto& eq = plant.equilibrium;
  for (long k = 0; k < steps; ++k) {
    const Eigen::VectorXd window =
        ref.segment(k, std::min<long>(horizons.N_t, steps - k));
    const auto sol = mct::mpc_step(model, x, u_prev, window, weights, constraints, horizons,
                                   &cache);
    const mct::ControlInput u = sol.u_first;
    os << mct::format_double(k * T_s) << ','
       << mct::format_double(x(mct::state::depth) + z_eq) << ','
       << mct::format_double(ref(k) + z_eq) << ','
       << mct::format_double(u(mct::input::fill_fwd) + eq.u_eq(mct::input::fill_fwd)) << ','
       << mct::format_double(u(mct::input::fill_aft) + eq.u_eq(mct::input::fill_aft)) << ','
       << mct::format_double(u(mct::input::torque) + eq.u_eq(mct::input::torque)) << ','
       << mct::format_double(r2d * (x(mct::state::roll) + eq.x_eq(mct::state::roll))) << ','
       << mct::format_double(r2d * (x(mct::state::pitch) + eq.x_eq(mct::state::pitch))) << ','
       << mct::format_double(r2d * (x(mct::state::yaw) + eq.x_eq(mct::state::yaw))) << ','
       << mct::format_double(sol.kkt_residual) << ',' << sol.iterations << '\n';
    x = mct::step(model, x, u, bounds);
    u_prev = u;
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, long seed_flag,
                 double duration_flag) {
  mct::GlobalConfig cfg = load_or_default(config_path);
  if (seed_flag >= 0) cfg.environment.seed = static_cast<unsigned>(seed_flag);
  if (duration_flag > 0) cfg.simulation.duration = duration_flag;
  if (cfg.planner_net_path.empty()) {
    throw std::runtime_error("simulate: planner.net_path is required (train-planner first)");
  }
  std::filesystem::create_directories(out_dir);

  const auto setup = mct::build_setup(cfg, mct::load_planner(cfg.planner_net_path));
  const auto result = mct::run_episode(setup);
  mct::write_log_csv(result.log, out_dir + "/log.csv");
  mct::write_metrics_json(result.metrics, out_dir + "/metrics.json");
  mct::write_simulation_plots(result.log, out_dir);
  return 0;
}

int cmd_compare_baseline(const std::string& config_path, const std::string& out_dir,
                         long seed_flag, double duration_flag) {
  mct::GlobalConfig cfg = load_or_default(config_path);
  if (seed_flag >= 0) cfg.environment.seed = static_cast<unsigned>(seed_flag);
  if (duration_flag > 0) cfg.simulation.duration = duration_flag;
  if (cfg.planner_net_path.empty()) {
    throw std::runtime_error("compare-baseline: planner.net_path is required");
  }
  std::filesystem::create_directories(out_dir);

  const auto setup = mct::build_setup(cfg, mct::load_planner(cfg.planner_net_path));
  const auto planned = mct::run_episode(setup);
  const auto baseline = mct::run_baseline(setup);

  const auto report = mct::compare(planned.metrics, baseline.metrics);
  mct::write_compare_json(report, out_dir + "/report.json");
  mct::write_log_csv(planned.log, out_dir + "/planned_log.csv");
  mct::write_log_csv(baseline.log, out_dir + "/baseline_log.csv");
  mct::write_simulation_plots(planned.log, out_dir);
  return 0;
}

int cmd_gp_fit(const std::string& in_path, const std::string& out_path, bool grid_search,
               const std::string& sample_out, unsigned seed) {
  const mct::CurrentField field = mct::load_adcp_csv(in_path);
  mct::GpHyperParams hp;
  const auto obs = field.observations();
  if (grid_search) hp = mct::gp_grid_search(obs, hp);
  const mct::GpModel gp = mct::gp_fit(obs, hp);

  json j;
  j["observations"] = obs.size();
  j["mean_mps"] = gp.mean_offset();
  j["hyperparameters"] = {{"signal_std", hp.signal_std},
                          {"length_depth_m", hp.length_depth},
                          {"length_time_s", hp.length_time},
                          {"noise_std", hp.noise_std}};
  j["log_marginal_likelihood"] = mct::gp_log_marginal_likelihood(obs, hp);
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("gp-fit: cannot open " + out_path);
  os << j.dump(2) << "\n";

  if (!sample_out.empty()) {
    const auto sample = gp.sample_realization(field.depths, field.times, seed);
    mct::save_field_csv(sample, sample_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth planning and tracking toolkit for a moored current turbine"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out, kind = "high", net_path, field_path, model_path, ref_path;
  std::string sample_out;
  double duration = 86400.0, z0 = 50.0, T_s = 2.0;
  double duration_flag = -1.0;
  long seed_flag = -1;
  unsigned seed = 7;
  int horizon = 288, episodes = -1;
  bool grid_search = false;

  auto* synth = app.add_subcommand("synth-env", "Write a synthetic shear-profile CSV");
  synth->add_option("--kind", kind, "low or high")->capture_default_str();
  synth->add_option("--duration", duration, "seconds")->capture_default_str();
  synth->add_option("--seed", seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", out, "output CSV")->required();

  auto* tp = app.add_subcommand("train-planner", "Train the depth-planning network");
  tp->add_option("--config", config_path, "JSON config ('-' for stdin)");
  tp->add_option("--episodes", episodes, "override planner.episodes");
  tp->add_option("--seed", seed_flag, "override planner.seed");
  tp->add_option("--out", out, "output network JSON")->required();

  auto* plan = app.add_subcommand("plan", "Greedy waypoint rollout from a trained network");
  plan->add_option("--net", net_path, "network JSON")->required();
  plan->add_option("--field", field_path, "current field CSV")->required();
  plan->add_option("--z0", z0, "start depth, m")->capture_default_str();
  plan->add_option("--horizon", horizon, "number of waypoints")->capture_default_str();
  plan->add_option("--out", out, "output CSV")->required();

  auto* track = app.add_subcommand("track", "Track a depth reference with the MPC");
  track->add_option("--model", model_path, "continuous model JSON")->required();
  track->add_option("--ref", ref_path, "reference CSV time_s,depth_m")->required();
  track->add_option("--ts", T_s, "sampling time, s")->capture_default_str();
  track->add_option("--out", out, "output CSV")->required();

  auto* sim = app.add_subcommand("simulate", "Closed-loop planner + tracker episode");
  sim->add_option("--config", config_path, "JSON config ('-' for stdin)");
  sim->add_option("--seed", seed_flag, "override environment.seed");
  sim->add_option("--duration", duration_flag, "override simulation.duration_s");
  sim->add_option("--out", out, "output directory")->required();

  auto* cb = app.add_subcommand("compare-baseline", "Paired planned vs hold-depth runs");
  cb->add_option("--config", config_path, "JSON config ('-' for stdin)");
  cb->add_option("--seed", seed_flag, "override environment.seed");
  cb->add_option("--duration", duration_flag, "override simulation.duration_s");
  cb->add_option("--out", out, "output directory")->required();

  auto* gp = app.add_subcommand("gp-fit", "Fit the GP environment model to a field CSV");
  gp->add_option("--in", field_path, "observations CSV")->required();
  gp->add_option("--out", out, "summary JSON")->required();
  gp->add_flag("--grid-search", grid_search, "select hyperparameters by marginal likelihood");
  gp->add_option("--sample", sample_out, "write one posterior realization CSV");
  gp->add_option("--seed", seed, "realization seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth_env(kind, duration, seed, out);
    if (tp->parsed()) return cmd_train_planner(config_path, out, episodes, seed_flag);
    if (plan->parsed()) return cmd_plan(net_path, field_path, z0, horizon, out);
    if (track->parsed()) return cmd_track(model_path, ref_path, out, T_s);
    if (sim->parsed()) return cmd_simulate(config_path, out, seed_flag, duration_flag);
    if (cb->parsed()) return cmd_compare_baseline(config_path, out, seed_flag, duration_flag);
    if (gp->parsed()) return cmd_gp_fit(field_path, out, grid_search, sample_out, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
