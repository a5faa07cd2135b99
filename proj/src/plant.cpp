#include "mct/plant.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace mct {
namespace {

using json = nlohmann::json;

// Modal layout: pairs occupy rows (0,1) (2,3) (4,5) (6,7) (8,9) (10,11),
// the real pole sits at row 12. Pair roles, fastest to slowest:
//   0: fast torque-coupled oscillation     3: heave
//   1: sway/yaw oscillation                4: slow horizontal drift
//   2: pitch                               5: depth/mooring
constexpr int kFastPair = 0;
constexpr int kSwayPair = 2;
constexpr int kPitchPair = 4;
constexpr int kHeavePair = 6;
constexpr int kDriftPair = 8;
constexpr int kDepthPair = 10;
constexpr int kRealRow = 12;

// Fixed physical-from-modal coupling matrix. Rows are physical states, columns
// modal coordinates. Every modal coordinate has a unique dominant physical
// owner, which keeps T invertible; the off-diagonal entries couple heave,
// pitch-rate and depth through the shared pairs. The Euler-angle rows read
// only the torque- and differential-fill-driven pairs, never the pairs the
// symmetric fill excites, so depth maneuvers cannot push the angles around.
// The depth row carries the large read-out weight: the slow-pair coordinates
// then stay O(0.1) for metre-scale maneuvers.
StateMatrix coupling_matrix() {
  StateMatrix T = StateMatrix::Zero();
  using namespace state;
  // fast pair: surge oscillation with roll participation
  T(surge, 0) = 1.0;
  T(surge, 8) = 0.3;
  T(surge, 12) = 0.1;
  T(roll, 1) = 1.0;
  T(roll, 0) = 0.2;
  T(roll, 12) = 0.1;
  // sway/yaw pair
  T(sway, 2) = 1.0;
  T(sway, 9) = 0.3;
  T(yaw, 3) = 1.0;
  T(yaw, 2) = 0.2;
  // pitch pair
  T(pitch_rate, 4) = 1.0;
  T(pitch_rate, 5) = 0.2;
  T(pitch_rate, 6) = 0.3;
  T(pitch, 5) = 1.0;
  T(pitch, 4) = 0.2;
  // heave pair, shared with the depth row below
  T(heave, 6) = 1.0;
  T(heave, 7) = 0.2;
  T(heave, 10) = 0.5;
  T(heave, 11) = 0.2;
  T(roll_rate, 7) = 1.0;
  T(roll_rate, 1) = 0.3;
  T(roll_rate, 0) = 0.2;
  T(roll_rate, 12) = 0.3;
  // slow horizontal drift pair: the positions
  T(pos_x, 8) = 1.0;
  T(pos_x, 0) = 0.1;
  T(pos_x, 10) = 0.2;
  T(pos_y, 9) = 1.0;
  T(pos_y, 2) = 0.1;
  T(pos_y, 11) = 0.2;
  // depth/mooring pair: depth reads it with a large weight, its quadrature
  // coordinate belongs to the yaw rate
  T(depth, 10) = 46.0;
  T(depth, 11) = 7.0;
  T(depth, 6) = 0.2;
  T(depth, 8) = 0.1;
  T(yaw_rate, 11) = 1.0;
  T(yaw_rate, 3) = 0.5;
  T(yaw_rate, 2) = 0.2;
  // real rotor pole
  T(rotor_rate, 12) = 1.0;
  T(rotor_rate, 0) = 0.1;
  return T;
}

InputMatrix modal_input_matrix(const ModelConfig& cfg) {
  InputMatrix Bm = InputMatrix::Zero();
  auto sym = [&](int row, double g) {
    Bm(row, input::fill_fwd) = g;
    Bm(row, input::fill_aft) = g;
  };
  auto diff = [&](int row, double g) {
    Bm(row, input::fill_fwd) = g;
    Bm(row, input::fill_aft) = -g;
  };
  Bm(kFastPair, input::torque) = cfg.gain_fast_torque;
  diff(kSwayPair, cfg.gain_sway_diff);
  diff(kPitchPair, cfg.gain_pitch_diff);
  diff(kPitchPair + 1, 0.25 * cfg.gain_pitch_diff);
  sym(kHeavePair, cfg.gain_heave_sym);
  sym(kHeavePair + 1, 0.3 * cfg.gain_heave_sym);
  sym(kDriftPair, cfg.gain_drift_sym);
  sym(kDriftPair + 1, cfg.gain_drift_sym);
  sym(kDepthPair, cfg.gain_depth_sym);
  Bm(kRealRow, input::torque) = cfg.gain_rotor_torque;
  return Bm;
}

StateMatrix modal_dynamics(const ModelConfig& cfg) {
  StateMatrix L = StateMatrix::Zero();
  for (int p = 0; p < 6; ++p) {
    const double a = cfg.pairs[p].real();
    const double b = cfg.pairs[p].imag();
    const int r = 2 * p;
    L(r, r) = a;
    L(r, r + 1) = b;
    L(r + 1, r) = -b;
    L(r + 1, r + 1) = a;
  }
  L(kRealRow, kRealRow) = cfg.real_pole;
  return L;
}

void require_distinct_spectrum(const ModelConfig& cfg) {
  std::array<std::complex<double>, 7> all;
  for (int i = 0; i < 6; ++i) all[i] = cfg.pairs[i];
  all[6] = {cfg.real_pole, 0.0};
  for (int i = 0; i < 7; ++i) {
    for (int j = i + 1; j < 7; ++j) {
      if (std::abs(all[i] - all[j]) < 1e-12) {
        throw std::invalid_argument("model config: repeated eigenvalue breaks the block structure");
      }
    }
  }
  for (int i = 0; i < 6; ++i) {
    if (std::abs(cfg.pairs[i].imag()) < 1e-12) {
      throw std::invalid_argument("model config: complex pair has zero imaginary part");
    }
  }
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int rows, int cols, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw std::runtime_error("model file: " + name + " must have " + std::to_string(rows) +
                             " rows, got " + std::to_string(j.is_array() ? j.size() : 0));
  }
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw std::runtime_error("model file: " + name + " row " + std::to_string(i) + " must have " +
                               std::to_string(cols) + " columns");
    }
    for (int jj = 0; jj < cols; ++jj) {
      const auto cell_name = [&] {
        return name + " at (" + std::to_string(i) + "," + std::to_string(jj) + ")";
      };
      if (!row.at(jj).is_number()) {
        throw std::runtime_error("model file: non-numeric entry in " + cell_name());
      }
      const double v = row.at(jj).get<double>();
      if (!std::isfinite(v)) {
        throw std::runtime_error("model file: non-finite entry in " + cell_name());
      }
      M(i, jj) = v;
    }
  }
  return M;
}

}  // namespace

EquilibriumPoint EquilibriumPoint::reference() {
  EquilibriumPoint eq;
  eq.x_eq << 0, 0, 0, 0, 1.49, 0, 0, 554.50, 0.38, 50, 0.01, 0.00, 3.14;
  eq.u_eq << 0.4677, 0.4677, -188280.0;
  return eq;
}

InputBounds InputBounds::reference(const EquilibriumPoint& eq) {
  InputBounds b;
  const double cap = 0.5;
  for (int i : {input::fill_fwd, input::fill_aft}) {
    b.u_min(i) = std::max(-cap, 0.0 - eq.u_eq(i));
    b.u_max(i) = std::min(cap, 1.0 - eq.u_eq(i));
  }
  const double tau_cap = 0.2 * std::abs(eq.u_eq(input::torque));
  b.u_min(input::torque) = -tau_cap;
  b.u_max(input::torque) = tau_cap;
  return b;
}

bool InputBounds::contains(const ControlInput& u, double tol) const {
  return (u.array() >= u_min.array() - tol).all() && (u.array() <= u_max.array() + tol).all();
}

ModelConfig ModelConfig::reference() {
  ModelConfig cfg;
  cfg.pairs = {std::complex<double>{-0.2731, 1.2585}, {-0.2588, 0.9618}, {-0.2647, 0.3564},
               {-0.1754, 0.3793},                     {-0.1121, 0.1549}, {-0.0033, 0.0021}};
  cfg.real_pole = -0.0483;
  cfg.gain_depth_sym = 0.031;
  cfg.gain_heave_sym = 0.06;
  cfg.gain_drift_sym = 0.02;
  cfg.gain_pitch_diff = 0.8;
  cfg.gain_sway_diff = 0.01;
  cfg.gain_fast_torque = 4e-6;
  cfg.gain_rotor_torque = 5e-5;
  return cfg;
}

ContinuousLinearModel build_reference_model(const ModelConfig& cfg) {
  require_distinct_spectrum(cfg);

  const StateMatrix T = coupling_matrix();
  const StateMatrix L = modal_dynamics(cfg);
  const InputMatrix Bm = modal_input_matrix(cfg);

  Eigen::PartialPivLU<StateMatrix> lu(T);
  ContinuousLinearModel model;
  model.A = T * L * lu.inverse();
  model.B = T * Bm;
  model.C = OutputMatrix::Zero();
  model.C(0, state::depth) = 1.0;
  model.equilibrium = EquilibriumPoint::reference();

  if (!is_controllable(model.A, model.B)) {
    throw std::invalid_argument("model config: gains leave (A, B) uncontrollable");
  }
  return model;
}

double max_natural_frequency(const ContinuousLinearModel& model) {
  return model.A.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_controllable(const StateMatrix& A, const InputMatrix& B) {
  Eigen::Matrix<double, kStateDim, kStateDim * kInputDim> K;
  InputMatrix col = B;
  for (int i = 0; i < kStateDim; ++i) {
    K.block<kStateDim, kInputDim>(0, i * kInputDim) = col;
    col = A * col;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
  const auto& s = svd.singularValues();
  const double tol = std::max(K.rows(), K.cols()) * s(0) * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > tol;
  return rank == kStateDim;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> zoh_discretize(const Eigen::MatrixXd& A,
                                                           const Eigen::MatrixXd& B, double T_s) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw std::invalid_argument("zoh_discretize: dimension mismatch between A and B");
  }
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  // expm([[A, B], [0, 0]] * T_s) = [[A_d, B_d], [0, I]]
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = A;
  aug.topRightCorner(n, m) = B;
  const Eigen::MatrixXd E = (aug * T_s).exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

DiscreteLinearModel discretize(const ContinuousLinearModel& model, double T_s) {
  if (!(T_s > 0.0)) {
    throw std::invalid_argument("discretize: sampling time must be positive");
  }
  const double omega_max = max_natural_frequency(model);
  if (omega_max > 0.0 && T_s >= M_PI / omega_max) {
    std::ostringstream oss;
    oss << "discretize: T_s=" << T_s << " s violates the sampling bound pi/omega_max="
        << M_PI / omega_max << " s";
    throw std::invalid_argument(oss.str());
  }

  const auto [Ad, Bd] = zoh_discretize(model.A, model.B, T_s);
  DiscreteLinearModel d;
  d.A_d = Ad;
  d.B_d = Bd;
  d.C_d = model.C;
  d.T_s = T_s;
  d.equilibrium = model.equilibrium;
  return d;
}

StateVector step(const DiscreteLinearModel& model, const StateVector& x, const ControlInput& u,
                 const InputBounds& bounds) {
  if (!bounds.contains(u, 1e-8)) {
    std::ostringstream oss;
    oss << "step: control input outside saturation bounds: u=[" << u.transpose() << "], bounds=["
        << bounds.u_min.transpose() << "] .. [" << bounds.u_max.transpose() << "]";
    throw std::domain_error(oss.str());
  }
  return step_unchecked(model, x, u);
}

void save_model(const ContinuousLinearModel& model, const std::string& path) {
  json j;
  j["A"] = matrix_to_json(model.A);
  j["B"] = matrix_to_json(model.B);
  j["C"] = matrix_to_json(model.C);
  j["x_eq"] = matrix_to_json(model.equilibrium.x_eq.transpose());
  j["u_eq"] = matrix_to_json(model.equilibrium.u_eq.transpose());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << j.dump(2) << "\n";
}

ContinuousLinearModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_model: " + path + ": " + e.what());
  }

  ContinuousLinearModel model;
  model.A = matrix_from_json(j.at("A"), kStateDim, kStateDim, "A");
  model.B = matrix_from_json(j.at("B"), kStateDim, kInputDim, "B");
  model.C = matrix_from_json(j.at("C"), 1, kStateDim, "C");
  model.equilibrium.x_eq = matrix_from_json(j.at("x_eq"), 1, kStateDim, "x_eq").transpose();
  model.equilibrium.u_eq = matrix_from_json(j.at("u_eq"), 1, kInputDim, "u_eq").transpose();

  const auto eig = model.A.eigenvalues();
  if ((eig.real().array() >= 0.0).any()) {
    std::cerr << "load_model: warning: A is not Hurwitz (max Re = " << eig.real().maxCoeff()
              << ")\n";
  }
  return model;
}

}  // namespace mct
