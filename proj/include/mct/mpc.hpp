#pragma once

#include "mct/plant.hpp"
#include "mct/qp.hpp"

#include <Eigen/Dense>

#include <optional>

namespace mct {

using InputWeight = Eigen::Matrix<double, kInputDim, kInputDim>;

struct MpcWeights {
  StateMatrix Q_part;   // stage state-deviation weight
  double q_term = 1.0;  // terminal weight on the depth deviation
  InputWeight R_part;   // input-target weight
  InputWeight R_dpart;  // input-move weight

  static MpcWeights reference();
  void validate() const;
};

// Box and per-step slew bounds in deviation coordinates. Entries may be
// +/-infinity for unconstrained components; min <= max componentwise.
struct MpcConstraints {
  ControlInput u_min;
  ControlInput u_max;
  ControlInput du_min;
  ControlInput du_max;
  double y_min = -std::numeric_limits<double>::infinity();
  double y_max = std::numeric_limits<double>::infinity();

  // Tank slew of 7.45e-4 %/s; `slew_in_percent` selects whether that figure
  // is percent (default, 7.45e-6 fraction/s) or already fraction per second.
  static MpcConstraints reference(const InputBounds& bounds, double T_s,
                                  bool slew_in_percent = true);
  void validate() const;
};

struct MpcHorizons {
  int N_t = 40;  // prediction horizon
  int N_c = 20;  // control horizon
};

// Prediction matrices for a fixed model and horizon pair; reusable across
// receding-horizon steps. Inputs beyond N_c are held at the last move.
struct PredictionMatrices {
  Eigen::MatrixXd free_response;  // (13*N_t) x 13, rows stack x(k+1..k+N_t)
  Eigen::MatrixXd forced;         // (13*N_t) x (3*N_c)
  MpcHorizons horizons;
};

PredictionMatrices build_prediction(const DiscreteLinearModel& model, const MpcHorizons& horizons);

// Condenses the tracking cost into min 1/2 w'Hw + f'w over the stacked input
// sequence, with box and slew rows in (G, h). `reference` holds N_t depth
// deviations for steps k+1..k+N_t. Throws on wrong reference length or an
// empty feasible set (box and slew bounds incompatible with u_prev).
QpProblem build_qp(const DiscreteLinearModel& model, const StateVector& x0,
                   const ControlInput& u_prev, const Eigen::VectorXd& reference,
                   const MpcWeights& weights, const MpcConstraints& constraints,
                   const MpcHorizons& horizons,
                   const PredictionMatrices* cache = nullptr);

struct MpcSolution {
  Eigen::Matrix<double, kInputDim, Eigen::Dynamic> u_sequence;  // 3 x N_c
  ControlInput u_first;
  Eigen::MatrixXd predicted_states;  // 13 x (N_t + 1), column 0 = x0
  Eigen::VectorXd predicted_depth;   // N_t entries, deviations
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// One receding-horizon step: condense, solve, reconstruct the predicted
// trajectory. Reference windows shorter than N_t are padded by holding the
// last value; the caller applies u_first only.
MpcSolution mpc_step(const DiscreteLinearModel& model, const StateVector& x,
                     const ControlInput& u_prev, const Eigen::VectorXd& reference_window,
                     const MpcWeights& weights, const MpcConstraints& constraints,
                     const MpcHorizons& horizons = {},
                     const PredictionMatrices* cache = nullptr, double tolerance = 1e-8);

}  // namespace mct
