#include "mct/sim.hpp"

#include "mct/csv.hpp"
#include "mct/svg.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mct {
namespace {

using json = nlohmann::json;

constexpr double kRad2Deg = 180.0 / M_PI;

SpeedLookup field_lookup(const CurrentField& field) {
  return [&field](double z, double t) { return field.at(z, std::min(t, field.duration())); };
}

SimulationResult run_loop(const SimulationSetup& setup, bool use_planner) {
  setup.validate();
  const long steps = std::lround(setup.duration / setup.T_s);
  const long steps_per_wp = std::lround(setup.T_p / setup.T_s);

  const SpeedLookup truth = field_lookup(setup.truth);
  const SpeedLookup forecast = setup.forecast ? setup.forecast : truth;
  const PredictionMatrices cache = build_prediction(setup.model, setup.horizons);

  StateVector x = StateVector::Zero();
  ControlInput u_prev = ControlInput::Zero();
  double ref_dev = 0.0;

  SimulationResult result;
  result.log.T_s = setup.T_s;
  result.log.z_eq = setup.z_eq;
  result.log.eq = setup.model.equilibrium;
  result.log.records.reserve(steps);

  for (long k = 0; k < steps; ++k) {
    const double t = k * setup.T_s;
    const double z_abs = x(state::depth) + setup.z_eq;

    if (use_planner && k % steps_per_wp == 0) {
      const Eigen::VectorXd wp = plan_path(*setup.planner, forecast, z_abs, 1,
                                           setup.T_p, t, setup.duration);
      ref_dev = wp(0) - setup.z_eq;
      result.log.waypoints.push_back(wp(0));
    }

    const Eigen::VectorXd window = Eigen::VectorXd::Constant(setup.horizons.N_t, ref_dev);
    MpcSolution sol;
    try {
      sol = mpc_step(setup.model, x, u_prev, window, setup.weights, setup.constraints,
                     setup.horizons, &cache, setup.qp_tolerance);
    } catch (const std::exception& e) {
      throw std::runtime_error("simulation failed at t=" + std::to_string(t) + " s: " + e.what());
    }
    const ControlInput u = sol.u_first;

    LogRecord rec;
    rec.t = t;
    rec.x = x;
    rec.u = u;
    rec.ref_dev = ref_dev;
    rec.z_abs = z_abs;
    rec.kkt_residual = sol.kkt_residual;
    rec.qp_iterations = sol.iterations;

    const StateVector x_next = step(setup.model, x, u, setup.bounds);
    const double z_next_abs = x_next(state::depth) + setup.z_eq;
    rec.power = net_power(z_abs, z_next_abs, truth, t, setup.power);
    result.log.records.push_back(std::move(rec));

    x = x_next;
    u_prev = u;
  }

  // Metrics from the log alone so the bookkeeping identity holds exactly.
  Metrics& m = result.metrics;
  m.duration = setup.duration;
  double sq = 0.0;
  const double tol = 1e-8;
  ControlInput prev = ControlInput::Zero();
  for (const auto& rec : result.log.records) {
    m.energy += rec.power.net * setup.T_s;
    const double err = rec.z_abs - (rec.ref_dev + setup.z_eq);
    sq += err * err;
    m.max_euler_dev_deg = std::max(
        m.max_euler_dev_deg,
        kRad2Deg * rec.x.segment<3>(state::roll).cwiseAbs().maxCoeff());
    bool violated = !setup.bounds.contains(rec.u, tol);
    for (int i = 0; i < kInputDim; ++i) {
      const double du = rec.u(i) - prev(i);
      if (du > setup.constraints.du_max(i) + tol || du < setup.constraints.du_min(i) - tol) {
        violated = true;
      }
    }
    if (violated) ++m.violations;
    prev = rec.u;
  }
  m.rmse = result.log.records.empty()
               ? 0.0
               : std::sqrt(sq / static_cast<double>(result.log.records.size()));
  return result;
}

}  // namespace

void SimulationSetup::validate() const {
  if (!(T_s > 0.0) || !(T_p > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("simulation: T_s, T_p and duration must be positive");
  }
  const double ratio = T_p / T_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("simulation: T_p must be an integer multiple of T_s");
  }
  const double periods = duration / T_p;
  if (std::abs(periods - std::round(periods)) > 1e-9) {
    throw std::invalid_argument("simulation: duration must be a multiple of T_p");
  }
  if (model.T_s > 0.0 && std::abs(model.T_s - T_s) > 1e-12) {
    throw std::invalid_argument("simulation: plant discretization does not match T_s");
  }
  truth.validate();
}

Eigen::VectorXd waypoints_to_reference(const Eigen::VectorXd& waypoints, double T_p, double T_s) {
  if (waypoints.size() < 1) {
    throw std::invalid_argument("waypoints_to_reference: need at least one waypoint");
  }
  const long per = std::lround(T_p / T_s);
  if (per < 1 || std::abs(T_p / T_s - per) > 1e-9) {
    throw std::invalid_argument("waypoints_to_reference: T_p must be a multiple of T_s");
  }
  Eigen::VectorXd ref(waypoints.size() * per);
  for (Eigen::Index i = 0; i < waypoints.size(); ++i) {
    ref.segment(i * per, per).setConstant(waypoints(i));
  }
  return ref;
}

SimulationResult run_episode(const SimulationSetup& setup) {
  if (!setup.planner.has_value()) {
    throw std::invalid_argument("run_episode: setup has no trained planner");
  }
  return run_loop(setup, true);
}

SimulationResult run_baseline(const SimulationSetup& setup) { return run_loop(setup, false); }

CompareReport compare(const Metrics& planned, const Metrics& baseline) {
  if (std::abs(planned.duration - baseline.duration) > 1e-9) {
    throw std::invalid_argument("compare: runs have different durations");
  }
  CompareReport r;
  r.planned = planned;
  r.baseline = baseline;
  r.gain_percent = baseline.energy != 0.0
                       ? (planned.energy - baseline.energy) / baseline.energy * 100.0
                       : 0.0;
  return r;
}

void write_log_csv(const SimulationLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_log_csv: cannot open " + path);
  out << "time_s,z_m,z_ref_m,Bf,Ba,tau_em,phi_deg,theta_deg,psi_deg,"
         "P_G,P_HD,P_CD,P_net,kkt_residual,iters\n";
  const ControlInput& u_eq = log.eq.u_eq;
  for (const auto& r : log.records) {
    out << format_double(r.t) << ',' << format_double(r.z_abs) << ','
        << format_double(r.ref_dev + log.z_eq) << ','
        << format_double(r.u(input::fill_fwd) + u_eq(input::fill_fwd)) << ','
        << format_double(r.u(input::fill_aft) + u_eq(input::fill_aft)) << ','
        << format_double(r.u(input::torque) + u_eq(input::torque)) << ','
        << format_double(kRad2Deg * (r.x(state::roll) + log.eq.x_eq(state::roll))) << ','
        << format_double(kRad2Deg * (r.x(state::pitch) + log.eq.x_eq(state::pitch))) << ','
        << format_double(kRad2Deg * (r.x(state::yaw) + log.eq.x_eq(state::yaw))) << ','
        << format_double(r.power.generated) << ',' << format_double(r.power.hold_depth) << ','
        << format_double(r.power.change_depth) << ',' << format_double(r.power.net) << ','
        << format_double(r.kkt_residual) << ',' << r.qp_iterations << '\n';
  }
}

void write_metrics_json(const Metrics& metrics, const std::string& path) {
  json j;
  j["energy_J"] = metrics.energy;
  j["rmse_m"] = metrics.rmse;
  j["max_euler_dev_deg"] = metrics.max_euler_dev_deg;
  j["violations"] = metrics.violations;
  j["duration_s"] = metrics.duration;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

void write_compare_json(const CompareReport& report, const std::string& path) {
  json j;
  j["gain_percent"] = report.gain_percent;
  j["rmse_m"] = report.planned.rmse;
  j["violations"] = report.planned.violations + report.baseline.violations;
  j["planned"] = {{"energy_J", report.planned.energy},
                  {"rmse_m", report.planned.rmse},
                  {"violations", report.planned.violations}};
  j["baseline"] = {{"energy_J", report.baseline.energy},
                   {"rmse_m", report.baseline.rmse},
                   {"violations", report.baseline.violations}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_compare_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

void write_simulation_plots(const SimulationLog& log, const std::string& out_dir) {
  const size_t n = log.records.size();
  std::vector<double> t(n), z(n), zr(n), phi(n), th(n), psi(n), bf(n), ba(n), tau(n), energy(n);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const auto& r = log.records[i];
    t[i] = r.t;
    z[i] = r.z_abs;
    zr[i] = r.ref_dev + log.z_eq;
    phi[i] = kRad2Deg * r.x(state::roll);
    th[i] = kRad2Deg * r.x(state::pitch);
    psi[i] = kRad2Deg * r.x(state::yaw);
    bf[i] = r.u(input::fill_fwd);
    ba[i] = r.u(input::fill_aft);
    tau[i] = r.u(input::torque);
    acc += r.power.net * log.T_s;
    energy[i] = acc;
  }
  write_svg_chart(out_dir + "/depth.svg", "Depth vs reference", "time [s]", "depth [m]",
                  {{"realized", t, z, "#1f77b4"}, {"reference", t, zr, "#d62728"}});
  write_svg_chart(out_dir + "/euler_angles.svg", "Euler angle deviations", "time [s]", "[deg]",
                  {{"phi", t, phi, "#1f77b4"}, {"theta", t, th, "#2ca02c"},
                   {"psi", t, psi, "#d62728"}});
  write_svg_chart(out_dir + "/inputs_fill.svg", "Tank fill deviations", "time [s]", "[fraction]",
                  {{"B_f", t, bf, "#1f77b4"}, {"B_a", t, ba, "#d62728"}});
  write_svg_chart(out_dir + "/input_torque.svg", "Torque deviation", "time [s]", "[N m]",
                  {{"tau_em", t, tau, "#1f77b4"}});
  write_svg_chart(out_dir + "/energy.svg", "Cumulative harvested energy", "time [s]", "[J]",
                  {{"energy", t, energy, "#1f77b4"}});
}

}  // namespace mct
