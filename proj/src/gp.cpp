#include "mct/gp.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mct {

void GpHyperParams::validate() const {
  if (!(signal_std > 0.0) || !(length_depth > 0.0) || !(length_time > 0.0) || noise_std < 0.0) {
    throw std::invalid_argument("gp hyperparameters must be positive (noise may be zero)");
  }
}

double se_kernel(double z1, double t1, double z2, double t2, const GpHyperParams& hp) {
  const double dz = (z1 - z2) / hp.length_depth;
  const double dt = (t1 - t2) / hp.length_time;
  return hp.signal_std * hp.signal_std * std::exp(-0.5 * (dz * dz + dt * dt));
}

namespace {

Eigen::MatrixXd gram(const std::vector<CurrentObservation>& obs, const GpHyperParams& hp) {
  const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      K(i, j) = se_kernel(obs[i].z, obs[i].t, obs[j].z, obs[j].t, hp);
      K(j, i) = K(i, j);
    }
  }
  K.diagonal().array() += hp.noise_std * hp.noise_std;
  return K;
}

}  // namespace

GpModel::GpModel(std::vector<CurrentObservation> observations, GpHyperParams hp)
    : obs_(std::move(observations)), hp_(hp) {
  hp_.validate();
  if (obs_.empty()) throw std::invalid_argument("gp_fit: needs at least one observation");

  const Eigen::Index n = static_cast<Eigen::Index>(obs_.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = obs_[i].v_c;
  mean_ = y.mean();

  chol_.compute(gram(obs_, hp_));
  if (chol_.info() != Eigen::Success) {
    throw std::runtime_error(
        "gp_fit: Gram matrix is not positive definite (duplicate inputs with zero noise?)");
  }
  alpha_ = chol_.solve((y.array() - mean_).matrix());
}

Eigen::VectorXd GpModel::cross_covariance(double z, double t) const {
  const Eigen::Index n = static_cast<Eigen::Index>(obs_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = se_kernel(z, t, obs_[i].z, obs_[i].t, hp_);
  return k;
}

GpModel::Prediction GpModel::predict(double depth_m, double time_s) const {
  const Eigen::VectorXd k = cross_covariance(depth_m, time_s);
  Prediction p;
  p.mean = mean_ + k.dot(alpha_);
  const double var = hp_.signal_std * hp_.signal_std - k.dot(chol_.solve(k));
  if (var < -1e-12) {
    throw std::runtime_error("gp_predict: posterior variance fell below the clamp tolerance");
  }
  p.variance = std::max(0.0, var);
  return p;
}

CurrentField GpModel::sample_realization(const Eigen::VectorXd& depths,
                                         const Eigen::VectorXd& times, unsigned seed,
                                         int grid_cap) const {
  const Eigen::Index m = depths.size() * times.size();
  if (m > grid_cap) {
    throw std::invalid_argument("sample_realization: grid of " + std::to_string(m) +
                                " points exceeds the dense cap of " + std::to_string(grid_cap));
  }

  // posterior covariance K** - K*^T (K + s^2 I)^-1 K*
  Eigen::MatrixXd Kxs(static_cast<Eigen::Index>(obs_.size()), m);
  Eigen::VectorXd mu(m);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    for (Eigen::Index i = 0; i < depths.size(); ++i, ++c) {
      Kxs.col(c) = cross_covariance(depths(i), times(j));
      mu(c) = mean_ + Kxs.col(c).dot(alpha_);
    }
  }
  Eigen::MatrixXd cov(m, m);
  c = 0;
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    for (Eigen::Index i = 0; i < depths.size(); ++i, ++c) {
      Eigen::Index c2 = 0;
      for (Eigen::Index j2 = 0; j2 < times.size(); ++j2) {
        for (Eigen::Index i2 = 0; i2 < depths.size(); ++i2, ++c2) {
          if (c2 < c) continue;
          cov(c, c2) = se_kernel(depths(i), times(j), depths(i2), times(j2), hp_);
          cov(c2, c) = cov(c, c2);
        }
      }
    }
  }
  cov.noalias() -= Kxs.transpose() * chol_.solve(Kxs);
  cov.diagonal().array() += 1e-10;  // jitter keeps the factorization alive

  Eigen::LLT<Eigen::MatrixXd> post(cov);
  if (post.info() != Eigen::Success) {
    throw std::runtime_error("sample_realization: posterior covariance factorization failed");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd draw(m);
  for (Eigen::Index i = 0; i < m; ++i) draw(i) = gauss(rng);

  const Eigen::VectorXd values = mu + post.matrixL() * draw;

  CurrentField field;
  field.depths = depths;
  field.times = times;
  field.speed.resize(depths.size(), times.size());
  c = 0;
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    for (Eigen::Index i = 0; i < depths.size(); ++i, ++c) {
      field.speed(i, j) = std::max(0.0, values(c));
    }
  }
  field.validate();
  return field;
}

double gp_log_marginal_likelihood(const std::vector<CurrentObservation>& observations,
                                  const GpHyperParams& hp) {
  hp.validate();
  if (observations.empty()) throw std::invalid_argument("log marginal likelihood: no data");
  const Eigen::Index n = static_cast<Eigen::Index>(observations.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = observations[i].v_c;
  const double mean = y.mean();
  const Eigen::VectorXd yc = y.array() - mean;

  Eigen::LLT<Eigen::MatrixXd> chol(gram(observations, hp));
  if (chol.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(chol.matrixL()(i, i));
  return -0.5 * yc.dot(chol.solve(yc)) - logdet - 0.5 * n * std::log(2.0 * M_PI);
}

GpHyperParams gp_grid_search(const std::vector<CurrentObservation>& observations,
                             const GpHyperParams& base) {
  const double factors[] = {0.5, 1.0, 2.0};
  GpHyperParams best = base;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double fs : factors) {
    for (double fz : factors) {
      for (double ft : factors) {
        GpHyperParams hp = base;
        hp.signal_std *= fs;
        hp.length_depth *= fz;
        hp.length_time *= ft;
        const double ll = gp_log_marginal_likelihood(observations, hp);
        if (ll > best_ll) {
          best_ll = ll;
          best = hp;
        }
      }
    }
  }
  return best;
}

}  // namespace mct
