#pragma once

#include <functional>

namespace mct {

struct PowerParams {
  double rho = 1030.0;          // water density, kg/m^3
  double rotor_area = 0.0;      // swept area, m^2
  double c_p = 0.415;           // power coefficient
  double zeta1 = 9.113;         // hold-depth consumption coefficient
  double zeta2 = -0.0365;       // change-depth consumption coefficient
  double T_p = 300.0;           // planning step, s

  static PowerParams reference();
  void validate() const;
};

struct PowerBreakdown {
  double generated = 0.0;
  double hold_depth = 0.0;
  double change_depth = 0.0;
  double net = 0.0;
};

// Speed of the ambient current at (depth, time); the closed loop binds this to
// either a gridded field or a GP posterior mean.
using SpeedLookup = std::function<double(double depth_m, double time_s)>;

// P = rho * A * c_p * v^3 / 2. Throws std::domain_error on negative speed.
double generated_power(double v_c, const PowerParams& params);

// Pump power spent holding depth against a current increase; zero when the
// current slows down or is unchanged.
double hold_depth_power(double v_now, double v_next, const PowerParams& params);

// Pump power spent ascending (z decreasing, z positive down); zero when
// descending or holding.
double change_depth_power(double z_now, double z_next, const PowerParams& params);

// Net power of a depth transition at time t: generation at the destination
// depth minus both consumption terms. Both speeds are sampled at t, so a pure
// hold never pays a consumption term.
PowerBreakdown net_power(double z_now, double z_next, const SpeedLookup& speed, double t,
                         const PowerParams& params);

}  // namespace mct
