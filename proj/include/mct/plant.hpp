#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <string>
#include <utility>

namespace mct {

inline constexpr int kStateDim = 13;
inline constexpr int kInputDim = 3;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ControlInput = Eigen::Matrix<double, kInputDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kInputDim>;
using OutputMatrix = Eigen::Matrix<double, 1, kStateDim>;

// State ordering [u v w p_b p_r q r x y z phi theta psi]; all values are
// deviations from the equilibrium point.
namespace state {
enum Index : int {
  surge = 0,
  sway = 1,
  heave = 2,
  roll_rate = 3,
  rotor_rate = 4,
  pitch_rate = 5,
  yaw_rate = 6,
  pos_x = 7,
  pos_y = 8,
  depth = 9,  // z, positive down
  roll = 10,
  pitch = 11,
  yaw = 12,
};
}  // namespace state

// Input ordering [B_f B_a tau_em] (tank fill fraction deviations, shaft
// torque deviation in N*m).
namespace input {
enum Index : int {
  fill_fwd = 0,
  fill_aft = 1,
  torque = 2,
};
}  // namespace input

struct EquilibriumPoint {
  StateVector x_eq;
  ControlInput u_eq;

  static EquilibriumPoint reference();
};

// Actuator limits in deviation coordinates. Absolute fill fractions
// (deviation + u_eq) must stay in [0, 1] on top of the +/-0.5 deviation cap.
struct InputBounds {
  ControlInput u_min;
  ControlInput u_max;

  static InputBounds reference(const EquilibriumPoint& eq);
  bool contains(const ControlInput& u, double tol = 0.0) const;
};

struct ContinuousLinearModel {
  StateMatrix A;
  InputMatrix B;
  OutputMatrix C;
  EquilibriumPoint equilibrium;
};

struct DiscreteLinearModel {
  StateMatrix A_d;
  InputMatrix B_d;
  OutputMatrix C_d;
  double T_s = 0.0;
  EquilibriumPoint equilibrium;
};

// Body-from-inertial rotation for ZYX Euler angles (yaw psi, pitch theta,
// roll phi). Orthonormal with determinant +1 for any finite angles.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> euler_rotation(Scalar phi, Scalar theta, Scalar psi) {
  using std::cos;
  using std::sin;
  const Scalar cphi = cos(phi), sphi = sin(phi);
  const Scalar cth = cos(theta), sth = sin(theta);
  const Scalar cpsi = cos(psi), spsi = sin(psi);
  Eigen::Matrix<Scalar, 3, 3> R;
  R << cpsi * cth, spsi * cth, -sth,
      cpsi * sth * sphi - spsi * cphi, cpsi * cphi + spsi * sth * sphi, cth * sphi,
      cpsi * sth * cphi + spsi * sphi, -cpsi * sphi + spsi * sth * cphi, cth * cphi;
  return R;
}

// Spectral/model configuration for the synthesized plant. The continuous A is
// assembled as T * blkdiag(modal blocks) * T^-1 where the modal blocks carry
// the configured eigenvalues and T is a fixed documented coupling matrix; the
// inputs act on the modal blocks through per-block gains.
struct ModelConfig {
  // Upper-half eigenvalues: six complex pairs plus one real pole.
  std::array<std::complex<double>, 6> pairs;
  double real_pole = 0.0;

  // Modal input gains: symmetric fill (B_f + B_a), differential fill
  // (B_f - B_a), shaft torque.
  double gain_depth_sym = 0.0;    // slow depth/mooring pair
  double gain_heave_sym = 0.0;    // heave pair
  double gain_drift_sym = 0.0;    // slow horizontal-drift pair
  double gain_pitch_diff = 0.0;   // pitch pair
  double gain_sway_diff = 0.0;    // sway/yaw pair
  double gain_fast_torque = 0.0;  // fast coupled pair
  double gain_rotor_torque = 0.0; // real rotor pole

  static ModelConfig reference();
};

// Builds the synthesized continuous model. Throws std::invalid_argument on
// repeated eigenvalues or gain sets that leave (A, B) uncontrollable.
ContinuousLinearModel build_reference_model(const ModelConfig& cfg = ModelConfig::reference());

// Natural frequencies are |eig(A)|; the largest one gates the sampling time.
double max_natural_frequency(const ContinuousLinearModel& model);

bool is_controllable(const StateMatrix& A, const InputMatrix& B);

// Exact zero-order-hold pair (A_d, B_d) = (e^{A T_s}, int_0^{T_s} e^{A tau} dtau B)
// via the augmented matrix exponential.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> zoh_discretize(const Eigen::MatrixXd& A,
                                                           const Eigen::MatrixXd& B, double T_s);

// Exact zero-order-hold discretization of the plant model. Throws
// std::invalid_argument when T_s <= 0 or T_s >= pi / omega_max.
DiscreteLinearModel discretize(const ContinuousLinearModel& model, double T_s);

// One plant update x+ = A_d x + B_d u. Throws std::domain_error when u falls
// outside `bounds` (the tracker must never produce such an input).
StateVector step(const DiscreteLinearModel& model, const StateVector& x, const ControlInput& u,
                 const InputBounds& bounds);

// Unchecked variant for linear-algebra identities and internal prediction.
inline StateVector step_unchecked(const DiscreteLinearModel& model, const StateVector& x,
                                  const ControlInput& u) {
  return model.A_d * x + model.B_d * u;
}

inline double output(const DiscreteLinearModel& model, const StateVector& x) {
  return (model.C_d * x)(0);
}

// JSON model file with keys A (13x13 row-major), B, C, x_eq, u_eq.
void save_model(const ContinuousLinearModel& model, const std::string& path);
ContinuousLinearModel load_model(const std::string& path);

}  // namespace mct
