#pragma once

#include <Eigen/Dense>

namespace mct {

// Convex quadratic program  min 1/2 w'Hw + f'w  s.t.  Gw <= h, with H
// symmetric positive definite. G may have zero rows (unconstrained problem).
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  void validate() const;
  Eigen::Index num_vars() const { return f.size(); }
  Eigen::Index num_constraints() const { return h.size(); }
  double objective(const Eigen::VectorXd& w) const {
    return 0.5 * w.dot(H * w) + f.dot(w);
  }
};

enum class QpStatus { converged, max_iterations, infeasible };

struct QpSolution {
  Eigen::VectorXd w;
  Eigen::VectorXd lambda;   // multipliers of Gw <= h
  int iterations = 0;
  double kkt_residual = 0.0;
  QpStatus status = QpStatus::converged;
};

// Primal-dual interior-point method (Mehrotra predictor-corrector). Runs to a
// KKT residual of `tolerance`; deterministic. When the iteration cap is hit
// the best iterate is returned flagged max_iterations; a diverging dual with
// persistent primal infeasibility yields status infeasible.
QpSolution solve_qp(const QpProblem& qp, double tolerance = 1e-8, int max_iterations = 100);

// max of stationarity, constraint violation and complementary slackness.
double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& w, const Eigen::VectorXd& lambda);

}  // namespace mct
