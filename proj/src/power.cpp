#include "mct/power.hpp"

#include <cmath>
#include <stdexcept>

namespace mct {

PowerParams PowerParams::reference() {
  PowerParams p;
  p.rotor_area = 100.0 * M_PI;
  return p;
}

void PowerParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("power params: rho must be positive");
  if (!(rotor_area > 0.0)) throw std::invalid_argument("power params: rotor area must be positive");
  if (!(c_p > 0.0 && c_p < 0.593)) {
    throw std::invalid_argument("power params: c_p must lie in (0, 0.593)");
  }
  if (!(T_p > 0.0)) throw std::invalid_argument("power params: T_p must be positive");
}

double generated_power(double v_c, const PowerParams& params) {
  if (v_c < 0.0 || !std::isfinite(v_c)) {
    throw std::domain_error("generated_power: current speed must be finite and non-negative");
  }
  return 0.5 * params.rho * params.rotor_area * params.c_p * v_c * v_c * v_c;
}

double hold_depth_power(double v_now, double v_next, const PowerParams& params) {
  const double dv = v_next - v_now;
  if (dv <= 0.0) return 0.0;
  return params.zeta1 / params.T_p * dv;
}

double change_depth_power(double z_now, double z_next, const PowerParams& params) {
  const double dz = z_next - z_now;
  if (dz >= 0.0) return 0.0;
  return params.zeta2 / params.T_p * dz;  // zeta2 < 0, so ascending costs power
}

PowerBreakdown net_power(double z_now, double z_next, const SpeedLookup& speed, double t,
                         const PowerParams& params) {
  const double v_now = speed(z_now, t);
  const double v_next = speed(z_next, t);
  PowerBreakdown out;
  out.generated = generated_power(v_next, params);
  out.hold_depth = hold_depth_power(v_now, v_next, params);
  out.change_depth = change_depth_power(z_now, z_next, params);
  out.net = out.generated - out.hold_depth - out.change_depth;
  return out;
}

}  // namespace mct
