#include "mct/sim.hpp"

#include <doctest.h>

#include <cmath>

using namespace mct;

namespace {

CurrentField uniform_field(double v, double duration) {
  CurrentField f;
  f.depths = Eigen::VectorXd::LinSpaced(25, 0.0, 120.0);
  f.times.resize(2);
  f.times << 0.0, duration;
  f.speed = Eigen::MatrixXd::Constant(25, 2, v);
  f.validate();
  return f;
}

SimulationSetup base_setup(CurrentField truth, double duration) {
  SimulationSetup s;
  const auto plant = build_reference_model();
  s.model = discretize(plant, 2.0);
  s.bounds = InputBounds::reference(plant.equilibrium);
  s.weights = MpcWeights::reference();
  s.constraints = MpcConstraints::reference(s.bounds, 2.0);
  s.power = PowerParams::reference();
  s.truth = std::move(truth);
  s.T_s = 2.0;
  s.T_p = 300.0;
  s.duration = duration;
  s.z_eq = 50.0;
  return s;
}

TrainedPlanner train_uniform_planner() {
  TrainingConfig cfg;
  cfg.episodes = 120;
  cfg.horizon = 24;
  cfg.decay = 0.03;
  cfg.sync_every = 250;
  cfg.seed = 5;
  const PowerParams power = PowerParams::reference();
  return train(fixed_field_sampler(uniform_field(1.6, 24 * 300.0)), cfg, power).planner;
}

}  // namespace

TEST_CASE("waypoints_to_reference zero-order hold") {
  Eigen::VectorXd one(1);
  one << 50.0;
  const Eigen::VectorXd ref1 = waypoints_to_reference(one, 300.0, 2.0);
  CHECK(ref1.size() == 150);
  CHECK(ref1.minCoeff() == 50.0);
  CHECK(ref1.maxCoeff() == 50.0);

  Eigen::VectorXd two(2);
  two << 50.0, 55.0;
  const Eigen::VectorXd ref2 = waypoints_to_reference(two, 300.0, 2.0);
  CHECK(ref2.size() == 300);
  CHECK(ref2(0) == 50.0);
  CHECK(ref2(149) == 50.0);
  CHECK(ref2(150) == 55.0);
  CHECK(ref2(299) == 55.0);

  for (int n : {1, 3, 7}) {
    const Eigen::VectorXd wp = Eigen::VectorXd::Constant(n, 42.0);
    CHECK(waypoints_to_reference(wp, 300.0, 2.0).size() == n * 150);
  }
}

TEST_CASE("baseline on a stationary field holds equilibrium exactly") {
  auto setup = base_setup(uniform_field(1.6, 3600.0), 3600.0);
  const auto result = run_baseline(setup);

  const auto& m = result.metrics;
  CHECK(m.violations == 0);
  CHECK(m.rmse < 1e-9);
  CHECK(m.max_euler_dev_deg < 1e-9);

  double max_u = 0.0;
  double energy = 0.0;
  for (const auto& r : result.log.records) {
    max_u = std::max(max_u, r.u.cwiseAbs().maxCoeff());
    energy += r.power.net * setup.T_s;
  }
  CHECK(max_u < 1e-6);
  CHECK(m.energy == energy);  // bookkeeping identity, exact

  // no depth changes -> no consumption -> pure generation
  const double expected = 3600.0 * generated_power(1.6, setup.power);
  CHECK(m.energy == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("planned episode on a uniform field stays at depth") {
  auto setup = base_setup(uniform_field(1.6, 7200.0), 7200.0);
  setup.planner = train_uniform_planner();
  const auto result = run_episode(setup);

  for (const auto& r : result.log.records) {
    CHECK(std::abs(r.z_abs - 50.0) < 0.5);
  }
  CHECK(result.metrics.violations == 0);
  CHECK(result.metrics.max_euler_dev_deg <= 6.0);

  const double expected = 7200.0 * generated_power(1.6, setup.power);
  CHECK(result.metrics.energy == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("reference changes only at planning boundaries and equals a waypoint") {
  auto setup = base_setup(uniform_field(1.6, 3600.0), 3600.0);
  setup.planner = train_uniform_planner();
  const auto result = run_episode(setup);

  const long per = std::lround(setup.T_p / setup.T_s);
  size_t wp_index = 0;
  double current = result.log.records.front().ref_dev;
  for (size_t k = 0; k < result.log.records.size(); ++k) {
    const auto& r = result.log.records[k];
    if (k % per == 0) {
      REQUIRE(wp_index < result.log.waypoints.size());
      CHECK(r.ref_dev + setup.z_eq == doctest::Approx(result.log.waypoints[wp_index]));
      current = r.ref_dev;
      ++wp_index;
    } else {
      CHECK(r.ref_dev == current);
    }
  }
  CHECK(wp_index == result.log.waypoints.size());
}

TEST_CASE("compare") {
  Metrics a, b;
  a.duration = b.duration = 100.0;

  SUBCASE("self comparison is zero gain") {
    a.energy = b.energy = 5e8;
    CHECK(compare(a, b).gain_percent == 0.0);
  }
  SUBCASE("9 percent arithmetic") {
    a.energy = 109.0;
    b.energy = 100.0;
    CHECK(compare(a, b).gain_percent == doctest::Approx(9.0).epsilon(1e-12));
  }
  SUBCASE("mismatched durations rejected") {
    b.duration = 50.0;
    CHECK_THROWS_AS(compare(a, b), std::invalid_argument);
  }
}

TEST_CASE("setup validation") {
  auto setup = base_setup(uniform_field(1.6, 3600.0), 3600.0);
  SUBCASE("T_p must be a multiple of T_s") {
    setup.T_p = 301.0;
    CHECK_THROWS_AS(setup.validate(), std::invalid_argument);
  }
  SUBCASE("duration must be a multiple of T_p") {
    setup.duration = 3500.0;
    CHECK_THROWS_AS(setup.validate(), std::invalid_argument);
  }
  SUBCASE("plant discretization must match T_s") {
    setup.T_s = 1.0;
    CHECK_THROWS_AS(setup.validate(), std::invalid_argument);
  }
  SUBCASE("run_episode requires a planner") {
    CHECK_THROWS_AS(run_episode(setup), std::invalid_argument);
  }
}

TEST_CASE("migrating shear rewards the planner over the baseline") {
  // the fast layer wanders away from 50 m; holding depth leaves energy behind
  const double duration = 14400.0;
  TrainingConfig cfg;
  cfg.episodes = 150;
  cfg.horizon = 48;  // covers the 4 h episode at T_p = 300 s
  cfg.decay = 0.02;
  cfg.seed = 3;
  const PowerParams power = PowerParams::reference();
  const auto planner =
      train(shear_family_sampler(ShearKind::high, duration, 100), cfg, power).planner;

  auto setup = base_setup(synthesize_shear_profile(ShearKind::high, duration, 207), duration);
  setup.planner = planner;
  const auto planned = run_episode(setup);
  const auto baseline = run_baseline(setup);
  const auto report = compare(planned.metrics, baseline.metrics);

  CHECK(planned.metrics.violations == 0);
  CHECK(planned.metrics.max_euler_dev_deg <= 6.0);
  CHECK(report.gain_percent > 0.0);
}
