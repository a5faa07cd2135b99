#pragma once

#include "mct/ocean.hpp"
#include "mct/power.hpp"

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mct {

// Planner view of the world: current depth, current speed at each candidate
// depth reachable this step, and the normalized time of episode.
struct PlannerState {
  double z = 0.0;
  Eigen::VectorXd v_local;  // one entry per action
  double t_norm = 0.0;
};

struct Transition {
  PlannerState s;
  int action = 0;
  double reward = 0.0;
  PlannerState s_next;
  bool terminal = false;
};

// Bounded FIFO of transitions with uniform sampling of distinct slots.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return buf_[i]; }

  // m distinct slots when size >= m; throws otherwise.
  std::vector<std::size_t> sample_indices(int m, std::mt19937_64& rng) const;

 private:
  std::deque<Transition> buf_;
  std::size_t capacity_;
};

// Two-hidden-layer fully connected network with rectified-linear activations,
// plain double storage. A copy of the object serves as the target network.
struct QNetwork {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;

  QNetwork() = default;
  QNetwork(int input_dim, int hidden, int output_dim, std::mt19937_64& rng);

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int output_dim() const { return static_cast<int>(W3.rows()); }
  bool finite() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;  // columns are samples
};

// Zero-mean/unit-variance input standardization, frozen from training data.
struct FeatureNorm {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const {
    return (raw - mean).cwiseQuotient(stddev);
  }
};

struct TrainingConfig {
  double gamma = 0.5;
  double eps_min = 0.01;
  double eps_max = 1.0;
  double decay = 0.01;
  double alpha = 1.0;
  // Reward handed to a move that fails the power-increase test is -penalty
  // instead of 0; holding still earns 0. Zero restores the plain two-level
  // reward. See README for why the default is nonzero.
  double wrong_move_penalty = 1.0;
  int batch = 64;
  std::size_t buffer_capacity = 500000;
  int hidden = 64;
  double learning_rate = 1e-3;
  double lr_final_fraction = 1.0;  // linear anneal target, 1.0 = constant rate
  int sync_every = 500;  // target-network sync period, gradient steps
  int episodes = 400;
  int horizon = 288;  // N_p, steps per episode
  unsigned seed = 1;
  std::vector<double> actions = {-5.0, 0.0, 5.0};
  double z_min = 30.0;
  double z_max = 90.0;

  void validate() const;
  int num_actions() const { return static_cast<int>(actions.size()); }
};

// alpha when the move strictly increases net power, else 0.
double reward(double P_next, double P_now, double alpha);

// eps_min + (eps_max - eps_min) * exp(-d * n_e)
double epsilon(int episode, const TrainingConfig& cfg);

// Greedy with probability 1-eps (ties to the lowest index), uniform over the
// unmasked actions otherwise. Throws when every action is masked.
int select_action(const Eigen::VectorXd& q_values, double eps, std::mt19937_64& rng,
                  const std::vector<bool>& mask);

double td_target(double r, const Eigen::VectorXd& q_next_target, double gamma, bool terminal);

// One mean-squared TD-error descent step on the taken-action outputs. Returns
// the pre-update loss; throws on a non-finite loss.
double sgd_step(QNetwork& net, const Eigen::MatrixXd& inputs, const std::vector<int>& actions,
                const Eigen::VectorXd& targets, double learning_rate,
                Eigen::MatrixXd* batch_gradient_probe = nullptr);

struct TrainedPlanner {
  QNetwork net;
  FeatureNorm norm;
  TrainingConfig cfg;
  PowerParams power;
};

struct EpisodeStats {
  double return_sum = 0.0;
  double mean_loss = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  TrainedPlanner planner;
  std::vector<EpisodeStats> log;
};

// Per-episode environment source; the int is the episode index.
using EpisodeSampler = std::function<CurrentField(int)>;

EpisodeSampler fixed_field_sampler(CurrentField field);
EpisodeSampler shear_family_sampler(ShearKind kind, double duration_s, unsigned base_seed);

// Offline training: per step an epsilon-greedy action, environment transition,
// power-based reward, replay store, mini-batch TD step against the target
// network, periodic target sync. Deterministic given cfg.seed.
TrainResult train(const EpisodeSampler& sampler, const TrainingConfig& cfg,
                  const PowerParams& power);

// Raw planner features for a state: [z, v_local..., t_norm].
Eigen::VectorXd planner_features(const PlannerState& s);

PlannerState make_planner_state(double z, const SpeedLookup& speed, double t, double t_norm,
                                const TrainingConfig& cfg);

// Stage reward used by training and the oracles: compares the net power of the
// transition against holding the current depth.
double stage_reward(double z, double z_next, const SpeedLookup& speed, double t,
                    const PowerParams& power, const TrainingConfig& cfg);

// Greedy rollout of N_p waypoints at T_p spacing starting from z0. The speed
// lookup is the planner's forecast (a field, or a GP posterior mean).
// `episode_span` fixes the time-of-episode normalization; it defaults to
// horizon * T_p.
Eigen::VectorXd plan_path(const TrainedPlanner& planner, const SpeedLookup& forecast, double z0,
                          int horizon, double T_p, double t0 = 0.0, double episode_span = -1.0);

void save_planner(const TrainedPlanner& planner, const std::string& path);
TrainedPlanner load_planner(const std::string& path);

}  // namespace mct
