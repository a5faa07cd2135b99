#include "mct/qp.hpp"

#include "qp_oracle.hpp"

#include <doctest.h>

#include <random>

using namespace mct;

namespace {

// random strictly convex QP with a guaranteed strictly feasible point
QpProblem random_qp(std::mt19937_64& rng, int max_n = 6, int max_m = 8) {
  std::uniform_int_distribution<int> pick_n(1, max_n), pick_m(0, max_m);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> margin(0.1, 1.5);

  const int n = pick_n(rng);
  const int m = pick_m(rng);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);

  QpProblem qp;
  qp.H = M.transpose() * M + 0.3 * Eigen::MatrixXd::Identity(n, n);
  qp.f.resize(n);
  for (int i = 0; i < n; ++i) qp.f(i) = gauss(rng);
  qp.G.resize(m, n);
  qp.h.resize(m);
  Eigen::VectorXd interior(n);
  for (int i = 0; i < n; ++i) interior(i) = gauss(rng);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) qp.G(i, j) = gauss(rng);
    qp.h(i) = qp.G.row(i).dot(interior) + margin(rng);
  }
  return qp;
}

}  // namespace

TEST_CASE("unconstrained minimum is the linear solve") {
  QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.f.resize(2);
  qp.f << -2.0, 0.0;
  qp.G.resize(0, 2);
  qp.h.resize(0);
  const auto sol = solve_qp(qp);
  CHECK(sol.status == QpStatus::converged);
  CHECK(sol.w(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.w(1) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("active bound pins the 1-D minimizer") {
  // min (w-3)^2 s.t. w <= 1
  QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  qp.f.resize(1);
  qp.f << -6.0;
  qp.G.resize(1, 1);
  qp.G << 1.0;
  qp.h.resize(1);
  qp.h << 1.0;
  const auto sol = solve_qp(qp);
  CHECK(sol.status == QpStatus::converged);
  CHECK(sol.w(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("200 random QPs match active-set enumeration") {
  std::mt19937_64 rng(2024);
  int compared = 0;
  while (compared < 200) {
    const QpProblem qp = random_qp(rng);
    const auto oracle = test::active_set_enumeration(qp);
    if (!oracle.found) continue;  // construction makes this rare
    ++compared;

    const auto sol = solve_qp(qp, 1e-8);
    REQUIRE(sol.status == QpStatus::converged);
    CHECK(sol.kkt_residual <= 1e-8);
    CHECK((sol.w - oracle.w).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(qp.objective(sol.w) < oracle.objective + 1e-6);
  }
}

TEST_CASE("KKT conditions hold at the reported solution") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const QpProblem qp = random_qp(rng);
    const auto sol = solve_qp(qp, 1e-8);
    REQUIRE(sol.status == QpStatus::converged);

    const Eigen::VectorXd stationarity = qp.H * sol.w + qp.f + qp.G.transpose() * sol.lambda;
    CHECK(stationarity.cwiseAbs().maxCoeff() <= 1e-7);
    if (qp.num_constraints() > 0) {
      const Eigen::VectorXd resid = qp.G * sol.w - qp.h;
      CHECK(resid.maxCoeff() <= 1e-8);
      CHECK(sol.lambda.minCoeff() >= -1e-10);
      CHECK(sol.lambda.cwiseProduct(resid).cwiseAbs().maxCoeff() <= 1e-7);
    }
  }
}

TEST_CASE("solution beats random feasible probes") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const QpProblem qp = random_qp(rng);
    const auto sol = solve_qp(qp);
    REQUIRE(sol.status == QpStatus::converged);
    int probes = 0;
    while (probes < 20) {
      Eigen::VectorXd p(qp.num_vars());
      for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = 2.0 * gauss(rng);
      if (qp.num_constraints() > 0 && (qp.G * p - qp.h).maxCoeff() > 0.0) continue;
      ++probes;
      CHECK(qp.objective(sol.w) <= qp.objective(p) + 1e-8);
    }
  }
}

TEST_CASE("infeasible problem is flagged") {
  // w <= -1 and -w <= -1 (w >= 1) cannot both hold
  QpProblem qp;
  qp.H = Eigen::MatrixXd::Identity(1, 1);
  qp.f = Eigen::VectorXd::Zero(1);
  qp.G.resize(2, 1);
  qp.G << 1.0, -1.0;
  qp.h.resize(2);
  qp.h << -1.0, -1.0;
  const auto sol = solve_qp(qp);
  CHECK(sol.status == QpStatus::infeasible);
}

TEST_CASE("problem validation") {
  QpProblem qp;
  qp.H = Eigen::MatrixXd::Identity(2, 2);
  qp.f = Eigen::VectorXd::Zero(2);
  qp.G.resize(0, 2);
  qp.h.resize(0);

  SUBCASE("asymmetric H rejected") {
    qp.H(0, 1) = 0.5;
    CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);
  }
  SUBCASE("indefinite H rejected") {
    qp.H(0, 0) = -1.0;
    CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);
  }
  SUBCASE("dimension mismatch rejected") {
    qp.G.resize(1, 3);
    qp.h.resize(1);
    CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);
  }
}
