#include "mct/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mct {

void QpProblem::validate() const {
  const Eigen::Index n = f.size();
  if (H.rows() != n || H.cols() != n) {
    throw std::invalid_argument("qp: H must be square and match f");
  }
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("qp: H must be symmetric");
  }
  if (G.rows() != h.size() || (G.rows() > 0 && G.cols() != n)) {
    throw std::invalid_argument("qp: G/h dimensions inconsistent with f");
  }
  if (!H.allFinite() || !f.allFinite() || !G.allFinite() || !h.allFinite()) {
    throw std::invalid_argument("qp: non-finite problem data");
  }
}

double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& w, const Eigen::VectorXd& lambda) {
  double r = (qp.H * w + qp.f + qp.G.transpose() * lambda).cwiseAbs().maxCoeff();
  if (qp.num_constraints() > 0) {
    const Eigen::VectorXd resid = qp.G * w - qp.h;  // <= 0 when feasible
    r = std::max(r, resid.maxCoeff());
    r = std::max(r, lambda.cwiseProduct(resid).cwiseAbs().maxCoeff());
    r = std::max(r, std::max(0.0, -lambda.minCoeff()));
  }
  return r;
}

namespace {

// factorized solve with two rounds of iterative refinement
Eigen::VectorXd refined_solve(const Eigen::LDLT<Eigen::MatrixXd>& fact,
                              const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd x = fact.solve(rhs);
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd r = rhs - M * x;
    x += fact.solve(r);
  }
  return x;
}

}  // namespace

QpSolution solve_qp(const QpProblem& qp, double tolerance, int max_iterations) {
  qp.validate();
  const Eigen::Index m = qp.num_constraints();

  Eigen::LDLT<Eigen::MatrixXd> hfact(qp.H);
  if (hfact.info() != Eigen::Success || !hfact.isPositive()) {
    throw std::invalid_argument("solve_qp: H must be positive definite");
  }

  QpSolution sol;
  if (m == 0) {
    sol.w = refined_solve(hfact, qp.H, -qp.f);
    sol.lambda.resize(0);
    sol.iterations = 0;
    sol.kkt_residual = kkt_residual(qp, sol.w, sol.lambda);
    sol.status = QpStatus::converged;
    return sol;
  }

  Eigen::VectorXd w = refined_solve(hfact, qp.H, -qp.f);
  Eigen::VectorXd s(m), lambda(m);
  {
    const Eigen::VectorXd slack = qp.h - qp.G * w;
    for (Eigen::Index i = 0; i < m; ++i) {
      s(i) = std::max(1.0, slack(i));
      lambda(i) = 1.0;
    }
  }

  const double f_scale = 1.0 + qp.f.cwiseAbs().maxCoeff();
  Eigen::VectorXd best_w = w, best_lambda = lambda;
  double best_kr = std::numeric_limits<double>::infinity();
  int stall = 0;

  const auto gT = qp.G.transpose();
  int iter = 0;
  for (iter = 1; iter <= max_iterations; ++iter) {
    const Eigen::VectorXd r_d = qp.H * w + qp.f + gT * lambda;
    const Eigen::VectorXd r_p = qp.G * w + s - qp.h;
    const double mu = s.dot(lambda) / static_cast<double>(m);
    const double r_p_norm = r_p.cwiseAbs().maxCoeff();

    // terminate on the same residual the solution reports
    const double kr = kkt_residual(qp, w, lambda);
    if (kr < best_kr) {
      best_kr = kr;
      best_w = w;
      best_lambda = lambda;
      stall = 0;
    } else if (++stall > 15) {
      break;  // no longer improving in double precision
    }
    if (kr <= tolerance) {
      sol.w = w;
      sol.lambda = lambda;
      sol.iterations = iter - 1;
      sol.kkt_residual = kr;
      sol.status = QpStatus::converged;
      return sol;
    }
    if (lambda.cwiseAbs().maxCoeff() > 1e12 * f_scale && r_p_norm > 1e2 * tolerance) {
      sol.w = w;
      sol.lambda = lambda;
      sol.iterations = iter - 1;
      sol.kkt_residual = kr;
      sol.status = QpStatus::infeasible;
      return sol;
    }

    const Eigen::VectorXd d = lambda.cwiseQuotient(s);
    Eigen::MatrixXd M = qp.H;
    M.noalias() += gT * d.asDiagonal() * qp.G;
    Eigen::LDLT<Eigen::MatrixXd> kfact(M);

    // affine scaling (predictor) direction
    Eigen::VectorXd r_c = s.cwiseProduct(lambda);
    Eigen::VectorXd rhs = -r_d + gT * ((r_c - lambda.cwiseProduct(r_p)).cwiseQuotient(s));
    const Eigen::VectorXd dw_aff = refined_solve(kfact, M, rhs);
    const Eigen::VectorXd ds_aff = -r_p - qp.G * dw_aff;
    const Eigen::VectorXd dl_aff = (-r_c - lambda.cwiseProduct(ds_aff)).cwiseQuotient(s);

    auto max_step = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
      double a = 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      }
      return a;
    };
    const double a_aff = std::min(max_step(s, ds_aff), max_step(lambda, dl_aff));
    const double mu_aff = (s + a_aff * ds_aff).dot(lambda + a_aff * dl_aff) / m;
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3);

    // corrector with centering
    r_c = s.cwiseProduct(lambda) + ds_aff.cwiseProduct(dl_aff) -
          Eigen::VectorXd::Constant(m, sigma * mu);
    rhs = -r_d + gT * ((r_c - lambda.cwiseProduct(r_p)).cwiseQuotient(s));
    const Eigen::VectorXd dw = refined_solve(kfact, M, rhs);
    const Eigen::VectorXd ds = -r_p - qp.G * dw;
    const Eigen::VectorXd dl = (-r_c - lambda.cwiseProduct(ds)).cwiseQuotient(s);

    const double eta = 0.995;
    const double a_p = std::min(1.0, eta * max_step(s, ds));
    const double a_d = std::min(1.0, eta * max_step(lambda, dl));
    w += a_p * dw;
    s += a_p * ds;
    lambda += a_d * dl;
  }

  sol.w = best_w;
  sol.lambda = best_lambda;
  sol.iterations = std::min(iter, max_iterations);
  sol.kkt_residual = best_kr;
  if (best_kr <= tolerance) {
    sol.status = QpStatus::converged;
  } else {
    const double primal_violation = (qp.G * best_w - qp.h).maxCoeff();
    sol.status = primal_violation > std::sqrt(tolerance) ? QpStatus::infeasible
                                                         : QpStatus::max_iterations;
  }
  return sol;
}

}  // namespace mct
