#pragma once

#include "mct/ocean.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <vector>

namespace mct {

struct GpHyperParams {
  double signal_std = 0.3;       // sigma_f, m/s
  double length_depth = 15.0;    // l_z, m
  double length_time = 10800.0;  // l_t, s
  double noise_std = 0.05;       // sigma, m/s

  void validate() const;
};

// Squared-exponential kernel over (depth, time) with independent length
// scales.
double se_kernel(double z1, double t1, double z2, double t2, const GpHyperParams& hp);

// Gaussian-process posterior over current speed with a constant empirical
// mean. Immutable once fitted; predictions are thread-safe.
class GpModel {
 public:
  GpModel(std::vector<CurrentObservation> observations, GpHyperParams hp);

  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };
  Prediction predict(double depth_m, double time_s) const;

  double mean_offset() const { return mean_; }
  const GpHyperParams& hyperparams() const { return hp_; }
  const std::vector<CurrentObservation>& observations() const { return obs_; }

  // One posterior sample over the grid, deterministic given the seed. Speeds
  // are clamped at zero. Throws std::invalid_argument when the grid exceeds
  // `grid_cap` points (dense factorization limit).
  CurrentField sample_realization(const Eigen::VectorXd& depths, const Eigen::VectorXd& times,
                                  unsigned seed, int grid_cap = 4096) const;

 private:
  Eigen::VectorXd cross_covariance(double z, double t) const;

  std::vector<CurrentObservation> obs_;
  GpHyperParams hp_;
  double mean_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;  // K + sigma^2 I
  Eigen::VectorXd alpha_;             // (K + sigma^2 I)^-1 (y - mean)
};

inline GpModel gp_fit(std::vector<CurrentObservation> observations, GpHyperParams hp = {}) {
  return GpModel(std::move(observations), hp);
}

// Optional hyperparameter selection: grid search maximizing the log marginal
// likelihood over multiplicative perturbations of `base`.
GpHyperParams gp_grid_search(const std::vector<CurrentObservation>& observations,
                             const GpHyperParams& base);

double gp_log_marginal_likelihood(const std::vector<CurrentObservation>& observations,
                                  const GpHyperParams& hp);

}  // namespace mct
