#include "mct/mpc.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

namespace mct {
namespace {

void require_psd(const Eigen::MatrixXd& M, const char* name) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument(std::string("mpc weights: ") + name + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument(std::string("mpc weights: ") + name +
                                " must be positive semidefinite");
  }
}

}  // namespace

MpcWeights MpcWeights::reference() {
  MpcWeights w;
  w.Q_part = StateMatrix::Zero();
  w.Q_part(state::depth, state::depth) = 1.0;
  w.q_term = 1.0;
  w.R_part = InputWeight::Zero();
  w.R_dpart = InputWeight::Identity();
  return w;
}

void MpcWeights::validate() const {
  require_psd(Q_part, "Q_part");
  require_psd(R_part, "R_part");
  require_psd(R_dpart, "R_dpart");
  if (q_term < 0.0) throw std::invalid_argument("mpc weights: q_term must be non-negative");
}

MpcConstraints MpcConstraints::reference(const InputBounds& bounds, double T_s,
                                         bool slew_in_percent) {
  MpcConstraints c;
  c.u_min = bounds.u_min;
  c.u_max = bounds.u_max;
  const double rate = slew_in_percent ? 7.45e-4 / 100.0 : 7.45e-4;  // fraction per second
  const double per_step = rate * T_s;
  const double inf = std::numeric_limits<double>::infinity();
  c.du_min << -per_step, -per_step, -inf;
  c.du_max << per_step, per_step, inf;
  return c;
}

void MpcConstraints::validate() const {
  for (int i = 0; i < kInputDim; ++i) {
    if (!(u_min(i) <= u_max(i)) || !(du_min(i) <= du_max(i))) {
      throw std::invalid_argument("mpc constraints: min bound exceeds max bound");
    }
  }
  if (!(y_min <= y_max)) throw std::invalid_argument("mpc constraints: y_min exceeds y_max");
}

PredictionMatrices build_prediction(const DiscreteLinearModel& model,
                                    const MpcHorizons& horizons) {
  const int Nt = horizons.N_t;
  const int Nc = horizons.N_c;
  if (Nt < 1 || Nc < 1 || Nc > Nt) {
    throw std::invalid_argument("mpc horizons: need 1 <= N_c <= N_t");
  }

  std::vector<StateMatrix> Apow(Nt + 1);
  Apow[0] = StateMatrix::Identity();
  for (int i = 1; i <= Nt; ++i) Apow[i] = model.A_d * Apow[i - 1];

  PredictionMatrices P;
  P.horizons = horizons;
  P.free_response.resize(kStateDim * Nt, kStateDim);
  P.forced = Eigen::MatrixXd::Zero(kStateDim * Nt, kInputDim * Nc);
  for (int i = 1; i <= Nt; ++i) {
    P.free_response.block<kStateDim, kStateDim>(kStateDim * (i - 1), 0) = Apow[i];
    for (int m = 0; m < i; ++m) {
      const int col = std::min(m, Nc - 1);  // inputs held beyond the control horizon
      P.forced.block<kStateDim, kInputDim>(kStateDim * (i - 1), kInputDim * col) +=
          Apow[i - 1 - m] * model.B_d;
    }
  }
  return P;
}

QpProblem build_qp(const DiscreteLinearModel& model, const StateVector& x0,
                   const ControlInput& u_prev, const Eigen::VectorXd& reference,
                   const MpcWeights& weights, const MpcConstraints& constraints,
                   const MpcHorizons& horizons, const PredictionMatrices* cache) {
  weights.validate();
  constraints.validate();
  const int Nt = horizons.N_t;
  const int Nc = horizons.N_c;
  if (reference.size() != Nt) {
    throw std::invalid_argument("build_qp: reference must supply N_t = " + std::to_string(Nt) +
                                " samples, got " + std::to_string(reference.size()));
  }
  for (int i = 0; i < kInputDim; ++i) {
    const double lo = std::max(constraints.u_min(i), u_prev(i) + constraints.du_min(i));
    const double hi = std::min(constraints.u_max(i), u_prev(i) + constraints.du_max(i));
    if (lo > hi) {
      throw std::invalid_argument("build_qp: box and slew bounds leave no feasible first move");
    }
  }

  PredictionMatrices local;
  const PredictionMatrices* P = cache;
  if (P == nullptr || P->horizons.N_t != Nt || P->horizons.N_c != Nc) {
    local = build_prediction(model, horizons);
    P = &local;
  }

  const int n = kInputDim * Nc;

  // Stacked stage weight: Q_part on steps k+1..k+N_t-1, terminal depth weight
  // at k+N_t. The state reference is zero except in the depth slot. H and f
  // are accumulated directly to avoid a dense 13Nt x 13Nt weight matrix.
  Eigen::MatrixXd weighted(kStateDim * Nt, n);  // Qbar * forced
  Eigen::VectorXd err0(kStateDim * Nt);         // Qbar * (free_response x0 - x_ref)
  const Eigen::VectorXd free_x = P->free_response * x0;
  StateMatrix Qterm = StateMatrix::Zero();
  Qterm(state::depth, state::depth) = weights.q_term;
  for (int i = 1; i <= Nt; ++i) {
    const StateMatrix& Q = (i < Nt) ? weights.Q_part : Qterm;
    StateVector xref = StateVector::Zero();
    xref(state::depth) = reference(i - 1);
    const int r = kStateDim * (i - 1);
    weighted.middleRows<kStateDim>(r) = Q * P->forced.middleRows<kStateDim>(r);
    err0.segment<kStateDim>(r) = Q * (free_x.segment<kStateDim>(r) - xref);
  }

  QpProblem qp;
  qp.H = P->forced.transpose() * weighted;
  qp.f = P->forced.transpose() * err0;

  // Move and target costs on the decision variables: the move j = 0 is
  // measured against u_prev, every later move couples neighbours.
  for (int j = 0; j < Nc; ++j) {
    const int c = kInputDim * j;
    qp.H.block<kInputDim, kInputDim>(c, c) += weights.R_part + weights.R_dpart;
    if (j + 1 < Nc) {
      qp.H.block<kInputDim, kInputDim>(c, c) += weights.R_dpart;
      qp.H.block<kInputDim, kInputDim>(c, c + kInputDim) -= weights.R_dpart;
      qp.H.block<kInputDim, kInputDim>(c + kInputDim, c) -= weights.R_dpart;
    }
  }
  qp.f.segment<kInputDim>(0) -= weights.R_dpart * u_prev;
  // d(i) = 0 keeps R_part free of a linear term.

  qp.H = 0.5 * (qp.H + qp.H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qp.H, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-9) {
    qp.H.diagonal().array() += 1e-9;
    std::cerr << "build_qp: Hessian regularized (min eigenvalue "
              << es.eigenvalues().minCoeff() << ")\n";
  }

  // Constraint rows: box, slew, then optional output bounds.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add_row = [&](const Eigen::VectorXd& g, double b) {
    if (std::isfinite(b)) {
      rows.push_back(g);
      rhs.push_back(b);
    }
  };
  for (int j = 0; j < Nc; ++j) {
    for (int i = 0; i < kInputDim; ++i) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
      g(kInputDim * j + i) = 1.0;
      add_row(g, constraints.u_max(i));
      add_row(-g, -constraints.u_min(i));
    }
  }
  for (int j = 0; j < Nc; ++j) {
    for (int i = 0; i < kInputDim; ++i) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
      g(kInputDim * j + i) = 1.0;
      double lo = constraints.du_min(i), hi = constraints.du_max(i);
      if (j == 0) {
        add_row(g, hi + u_prev(i));
        add_row(-g, -(lo + u_prev(i)));
      } else {
        g(kInputDim * (j - 1) + i) = -1.0;
        add_row(g, hi);
        add_row(-g, -lo);
      }
    }
  }
  if (std::isfinite(constraints.y_min) || std::isfinite(constraints.y_max)) {
    for (int i = 1; i <= Nt; ++i) {
      const int r = kStateDim * (i - 1);
      const Eigen::VectorXd crow = (model.C_d * P->forced.middleRows<kStateDim>(r)).transpose();
      const double y_free = (model.C_d * free_x.segment<kStateDim>(r))(0);
      add_row(crow, constraints.y_max - y_free);
      add_row(-crow, y_free - constraints.y_min);
    }
  }

  qp.G.resize(static_cast<Eigen::Index>(rows.size()), n);
  qp.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    qp.G.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    qp.h(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  return qp;
}

MpcSolution mpc_step(const DiscreteLinearModel& model, const StateVector& x,
                     const ControlInput& u_prev, const Eigen::VectorXd& reference_window,
                     const MpcWeights& weights, const MpcConstraints& constraints,
                     const MpcHorizons& horizons, const PredictionMatrices* cache,
                     double tolerance) {
  const int Nt = horizons.N_t;
  const int Nc = horizons.N_c;
  if (reference_window.size() < 1) {
    throw std::invalid_argument("mpc_step: reference window must hold at least one sample");
  }
  Eigen::VectorXd ref(Nt);
  for (int i = 0; i < Nt; ++i) {
    ref(i) = i < reference_window.size() ? reference_window(i)
                                         : reference_window(reference_window.size() - 1);
  }

  const QpProblem qp = build_qp(model, x, u_prev, ref, weights, constraints, horizons, cache);
  const QpSolution qs = solve_qp(qp, tolerance);
  if (qs.status == QpStatus::infeasible) {
    throw std::runtime_error("mpc_step: QP reported an infeasible constraint set");
  }

  MpcSolution sol;
  sol.u_sequence.resize(kInputDim, Nc);
  for (int j = 0; j < Nc; ++j) sol.u_sequence.col(j) = qs.w.segment<kInputDim>(kInputDim * j);
  sol.u_first = sol.u_sequence.col(0);
  sol.kkt_residual = qs.kkt_residual;
  sol.iterations = qs.iterations;
  sol.converged = qs.status == QpStatus::converged;

  sol.predicted_states.resize(kStateDim, Nt + 1);
  sol.predicted_depth.resize(Nt);
  sol.predicted_states.col(0) = x;
  for (int i = 0; i < Nt; ++i) {
    const ControlInput u = sol.u_sequence.col(std::min(i, Nc - 1));
    sol.predicted_states.col(i + 1) =
        step_unchecked(model, sol.predicted_states.col(i), u);
    sol.predicted_depth(i) = sol.predicted_states(state::depth, i + 1);
  }
  return sol;
}

}  // namespace mct
