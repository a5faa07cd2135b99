#include "mct/plant.hpp"

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

using namespace mct;

namespace {

const std::vector<std::complex<double>> kExpectedSpectrum = {
    {-0.2731, 1.2585},  {-0.2731, -1.2585}, {-0.2588, 0.9618}, {-0.2588, -0.9618},
    {-0.2647, 0.3564},  {-0.2647, -0.3564}, {-0.1754, 0.3793}, {-0.1754, -0.3793},
    {-0.1121, 0.1549},  {-0.1121, -0.1549}, {-0.0033, 0.0021}, {-0.0033, -0.0021},
    {-0.0483, 0.0}};

// greedy bipartite match; each expected eigenvalue must find a distinct
// computed one within tol
bool spectra_match(const Eigen::VectorXcd& computed,
                   const std::vector<std::complex<double>>& expected, double tol) {
  std::vector<bool> used(computed.size(), false);
  for (const auto& e : expected) {
    bool found = false;
    for (Eigen::Index i = 0; i < computed.size(); ++i) {
      if (!used[i] && std::abs(computed(i) - e) <= tol) {
        used[i] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

std::string temp_path(const char* name) {
  return std::string("/tmp/mct_test_") + name + "_" + std::to_string(::getpid()) + ".json";
}

}  // namespace

TEST_CASE("euler_rotation zero angles is the identity") {
  const auto R = euler_rotation(0.0, 0.0, 0.0);
  CHECK((R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("euler_rotation quarter-turn yaw") {
  const auto R = euler_rotation(0.0, 0.0, M_PI / 2.0);
  Eigen::Matrix3d expected;
  expected << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  CHECK((R - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("euler_rotation is orthonormal with unit determinant") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int i = 0; i < 200; ++i) {
    const auto R = euler_rotation(angle(rng), angle(rng), angle(rng));
    CHECK((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("reference model reproduces the published spectrum") {
  const auto model = build_reference_model();
  CHECK(spectra_match(model.A.eigenvalues(), kExpectedSpectrum, 1e-3));
  CHECK(max_natural_frequency(model) == doctest::Approx(1.29).epsilon(0.01));
}

TEST_CASE("reference model structure") {
  const auto model = build_reference_model();

  SUBCASE("output selects depth") {
    OutputMatrix expected = OutputMatrix::Zero();
    expected(0, state::depth) = 1.0;
    CHECK((model.C - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("controllable") { CHECK(is_controllable(model.A, model.B)); }
  SUBCASE("Hurwitz") {
    CHECK(model.A.eigenvalues().real().maxCoeff() < 0.0);
  }
  SUBCASE("finite nonzero DC gain from symmetric fill to depth") {
    const Eigen::VectorXd g = -model.C * model.A.inverse() * model.B * Eigen::Vector3d(1, 1, 0);
    REQUIRE(std::isfinite(g(0)));
    CHECK(std::abs(g(0)) > 10.0);
    CHECK(std::abs(g(0)) < 1e5);
    CHECK(g(0) > 0.0);  // filling ballast sinks the turbine (z positive down)
  }
  SUBCASE("equilibrium defaults") {
    CHECK(model.equilibrium.x_eq(state::rotor_rate) == doctest::Approx(1.49));
    CHECK(model.equilibrium.x_eq(state::depth) == doctest::Approx(50.0));
    CHECK(model.equilibrium.u_eq(input::torque) == doctest::Approx(-188280.0));
  }
}

TEST_CASE("build_reference_model rejects bad configs") {
  ModelConfig cfg = ModelConfig::reference();
  SUBCASE("repeated eigenvalue") {
    cfg.pairs[1] = cfg.pairs[0];
    CHECK_THROWS_AS(build_reference_model(cfg), std::invalid_argument);
  }
  SUBCASE("zero gains are uncontrollable") {
    cfg.gain_depth_sym = 0.0;
    cfg.gain_heave_sym = 0.0;
    cfg.gain_drift_sym = 0.0;
    cfg.gain_pitch_diff = 0.0;
    cfg.gain_sway_diff = 0.0;
    cfg.gain_fast_torque = 0.0;
    cfg.gain_rotor_torque = 0.0;
    CHECK_THROWS_AS(build_reference_model(cfg), std::invalid_argument);
  }
}

TEST_CASE("zoh_discretize scalar cases") {
  SUBCASE("pure integrator") {
    Eigen::MatrixXd A(1, 1), B(1, 1);
    A << 0.0;
    B << 1.0;
    const auto [Ad, Bd] = zoh_discretize(A, B, 2.0);
    CHECK(Ad(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(Bd(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("stable scalar pole") {
    Eigen::MatrixXd A(1, 1), B(1, 1);
    A << -0.0483;
    B << 1.0;
    const auto [Ad, Bd] = zoh_discretize(A, B, 2.0);
    CHECK(Ad(0, 0) == doctest::Approx(std::exp(-0.0966)).epsilon(1e-12));
    CHECK(Ad(0, 0) == doctest::Approx(0.907918).epsilon(1e-6));
  }
}

TEST_CASE("discretize honours the sampling gate") {
  const auto model = build_reference_model();
  CHECK_THROWS_AS(discretize(model, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(discretize(model, 0.0), std::invalid_argument);
  // pi / 1.2878 = 2.4395 s, so 2 s passes and 2.5 s must not
  CHECK_NOTHROW(discretize(model, 2.0));
  CHECK_THROWS_AS(discretize(model, 2.5), std::invalid_argument);
}

TEST_CASE("discrete spectrum is exp(lambda T_s)") {
  const auto model = build_reference_model();
  const auto d = discretize(model, 2.0);

  CHECK(d.A_d.eigenvalues().cwiseAbs().maxCoeff() < 1.0);

  const Eigen::VectorXcd lam_c = model.A.eigenvalues();
  const Eigen::VectorXcd lam_d = d.A_d.eigenvalues();
  std::vector<std::complex<double>> expected;
  for (Eigen::Index i = 0; i < lam_c.size(); ++i) {
    expected.push_back(std::exp(lam_c(i) * 2.0));
  }
  CHECK(spectra_match(lam_d, expected, 1e-9));
}

TEST_CASE("step behaviour") {
  const auto model = build_reference_model();
  const auto d = discretize(model, 2.0);
  const auto bounds = InputBounds::reference(model.equilibrium);

  SUBCASE("equilibrium is a fixed point") {
    const StateVector x = step(d, StateVector::Zero(), ControlInput::Zero(), bounds);
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("input response matches B_d column") {
    ControlInput u = ControlInput::Zero();
    u(0) = 0.01;
    const StateVector x = step(d, StateVector::Zero(), u, bounds);
    CHECK((x - d.B_d * u).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("free response decays") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    StateVector x;
    for (int i = 0; i < kStateDim; ++i) x(i) = gauss(rng);
    const double norm0 = x.norm();
    double prev = norm0;
    for (int k = 0; k < 10000; ++k) {
      x = step_unchecked(d, x, ControlInput::Zero());
      if (k % 1000 == 999) {
        CHECK(x.norm() < prev + 1e-12);
        prev = x.norm();
      }
    }
    CHECK(x.norm() < 1e-6 * norm0);
  }
  SUBCASE("linearity") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      StateVector x1, x2;
      ControlInput u1, u2;
      for (int i = 0; i < kStateDim; ++i) {
        x1(i) = gauss(rng);
        x2(i) = gauss(rng);
      }
      for (int i = 0; i < kInputDim; ++i) {
        u1(i) = 1e-3 * gauss(rng);
        u2(i) = 1e-3 * gauss(rng);
      }
      const StateVector lhs = step_unchecked(d, x1 + x2, u1 + u2);
      const StateVector rhs = step_unchecked(d, x1, u1) + step_unchecked(d, x2, u2);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("saturation violation is rejected") {
    ControlInput u = ControlInput::Zero();
    u(input::fill_fwd) = 0.7;
    CHECK_THROWS_AS(step(d, StateVector::Zero(), u, bounds), std::domain_error);
  }
}

TEST_CASE("input bounds") {
  const auto eq = EquilibriumPoint::reference();
  const auto b = InputBounds::reference(eq);
  // absolute fill must stay in [0, 1]: deviation in [-0.4677, 0.5]
  CHECK(b.u_min(input::fill_fwd) == doctest::Approx(-0.4677));
  CHECK(b.u_max(input::fill_fwd) == doctest::Approx(0.5));
  CHECK(b.u_max(input::torque) == doctest::Approx(37656.0));
  CHECK(b.contains(ControlInput::Zero()));
}

TEST_CASE("model file round-trip") {
  const auto model = build_reference_model();
  const std::string path = temp_path("roundtrip");
  save_model(model, path);
  const auto loaded = load_model(path);
  CHECK((model.A - loaded.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.B - loaded.B).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.C - loaded.C).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.equilibrium.x_eq - loaded.equilibrium.x_eq).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("load_model rejects malformed files") {
  SUBCASE("wrong row count") {
    const std::string path = temp_path("shortA");
    {
      std::ofstream out(path);
      out << R"({"A": [[0]], "B": [], "C": [], "x_eq": [], "u_eq": []})";
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("13 rows"), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("non-numeric cell names the location") {
    const auto model = build_reference_model();
    const std::string path = temp_path("nan");
    save_model(model, path);
    // corrupt one A entry into a JSON null (what a NaN serializes to)
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find('[', text.find("\"A\""));
    const auto cell = text.find_first_not_of("[ \n", pos);
    const auto end = text.find_first_of(",]", cell);
    text.replace(cell, end - cell, "null");
    {
      std::ofstream out(path);
      out << text;
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("A at (0,0)"), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("unstable A loads with a warning, not an error") {
    auto model = build_reference_model();
    model.A = StateMatrix::Identity() * 0.1;
    const std::string path = temp_path("unstable");
    save_model(model, path);
    CHECK_NOTHROW(load_model(path));
    std::remove(path.c_str());
  }
}
