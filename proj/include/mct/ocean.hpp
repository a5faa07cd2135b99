#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mct {

inline constexpr double kInstrumentMaxDepth = 400.0;  // m, ADCP range

struct CurrentObservation {
  double t = 0.0;    // s
  double z = 0.0;    // m, positive down
  double v_c = 0.0;  // m/s
};

// Gridded current speed over depth x time. Grids are strictly increasing and
// uniformly spaced; speed(i, j) is the value at depth(i), time(j).
struct CurrentField {
  Eigen::VectorXd depths;  // m
  Eigen::VectorXd times;   // s
  Eigen::MatrixXd speed;   // m/s, depths.size() x times.size()

  void validate() const;
  double min_depth() const { return depths(0); }
  double max_depth() const { return depths(depths.size() - 1); }
  double duration() const { return times(times.size() - 1); }

  // Bilinear interpolation; throws std::out_of_range outside the grid.
  double at(double depth_m, double time_s) const;

  std::vector<CurrentObservation> observations() const;
};

struct FillReport {
  int dropped_rows = 0;  // bad rows removed before gridding
  int filled_cells = 0;  // grid cells completed by nearest depth neighbour
};

// Reads `time_s,depth_m,speed_mps` CSV data. Rows with NaN, negative speed or
// depth outside [0, 400] m are dropped; holes in the resulting grid are filled
// from the nearest depth with data at the same time.
CurrentField load_adcp_csv(const std::string& path, FillReport* report = nullptr);

void save_field_csv(const CurrentField& field, const std::string& path);

enum class ShearKind { low, high };
ShearKind parse_shear_kind(const std::string& name);

// Deterministic synthetic shear profile: a surface-intensified mean plus a
// migrating jet, smooth temporal modulation and small seeded noise. The high
// kind carries at least twice the vertical speed gradient of the low kind.
CurrentField synthesize_shear_profile(ShearKind kind, double duration_s, unsigned seed,
                                      double depth_step_m = 5.0, double time_step_s = 300.0);

// Mean absolute vertical gradient over the grid, used to compare shear kinds.
double mean_vertical_gradient(const CurrentField& field);

}  // namespace mct
