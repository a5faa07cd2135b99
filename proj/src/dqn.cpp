#include "mct/dqn.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace mct {
namespace {

using json = nlohmann::json;

Eigen::MatrixXd he_init(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / cols));
  Eigen::MatrixXd W(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) W(i, j) = gauss(rng);
  }
  return W;
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

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) return {};
  const auto cols = j.at(0).size();
  Eigen::MatrixXd M(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    for (size_t c = 0; c < cols; ++c) M(i, c) = j.at(i).at(c).get<double>();
  }
  return M;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

double clamp_depth(double z, const TrainingConfig& cfg) {
  return std::clamp(z, cfg.z_min, cfg.z_max);
}

std::vector<bool> action_mask(double z, const TrainingConfig& cfg) {
  std::vector<bool> mask(cfg.actions.size());
  for (size_t a = 0; a < cfg.actions.size(); ++a) {
    const double z_next = z + cfg.actions[a];
    mask[a] = z_next >= cfg.z_min - 1e-9 && z_next <= cfg.z_max + 1e-9;
  }
  return mask;
}

FeatureNorm fit_feature_norm(const CurrentField& field, const TrainingConfig& cfg, double T_p) {
  std::vector<Eigen::VectorXd> samples;
  const double episode_span = cfg.horizon * T_p;
  const SpeedLookup speed = [&field](double z, double t) {
    return field.at(z, std::min(t, field.duration()));
  };
  const double lattice = std::abs(cfg.actions.back()) > 0 ? std::abs(cfg.actions.back()) : 5.0;
  for (double z = cfg.z_min; z <= cfg.z_max + 1e-9; z += lattice) {
    for (Eigen::Index j = 0; j < field.times.size(); ++j) {
      const double t = field.times(j);
      const double t_norm = std::clamp(t / episode_span, 0.0, 1.0);
      samples.push_back(planner_features(make_planner_state(z, speed, t, t_norm, cfg)));
    }
  }
  const Eigen::Index d = samples.front().size();
  FeatureNorm norm;
  norm.mean = Eigen::VectorXd::Zero(d);
  norm.stddev = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) norm.mean += s;
  norm.mean /= static_cast<double>(samples.size());
  for (const auto& s : samples) norm.stddev += (s - norm.mean).cwiseAbs2();
  norm.stddev = (norm.stddev / static_cast<double>(samples.size())).cwiseSqrt();
  norm.stddev = norm.stddev.cwiseMax(1e-6);
  return norm;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (buf_.size() == capacity_) buf_.pop_front();
  buf_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int m, std::mt19937_64& rng) const {
  if (m <= 0 || static_cast<std::size_t>(m) > buf_.size()) {
    throw std::invalid_argument("replay buffer: cannot sample " + std::to_string(m) +
                                " transitions from " + std::to_string(buf_.size()));
  }
  std::uniform_int_distribution<std::size_t> pick(0, buf_.size() - 1);
  std::vector<std::size_t> out;
  out.reserve(m);
  while (static_cast<int>(out.size()) < m) {
    const std::size_t idx = pick(rng);
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  return out;
}

QNetwork::QNetwork(int input_dim, int hidden, int output_dim, std::mt19937_64& rng) {
  W1 = he_init(hidden, input_dim, rng);
  W2 = he_init(hidden, hidden, rng);
  W3 = he_init(output_dim, hidden, rng);
  b1 = Eigen::VectorXd::Zero(hidden);
  b2 = Eigen::VectorXd::Zero(hidden);
  b3 = Eigen::VectorXd::Zero(output_dim);
}

bool QNetwork::finite() const {
  return W1.allFinite() && W2.allFinite() && W3.allFinite() && b1.allFinite() && b2.allFinite() &&
         b3.allFinite();
}

Eigen::VectorXd QNetwork::forward(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd a1 = ((W1 * x + b1).array().max(0.0)).matrix();
  const Eigen::VectorXd a2 = ((W2 * a1 + b2).array().max(0.0)).matrix();
  return W3 * a2 + b3;
}

Eigen::MatrixXd QNetwork::forward_batch(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd a1 = ((W1 * X).colwise() + b1).array().max(0.0);
  const Eigen::MatrixXd a2 = ((W2 * a1).colwise() + b2).array().max(0.0);
  return (W3 * a2).colwise() + b3;
}

void TrainingConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("dqn: need 0 <= gamma < 1");
  if (!(eps_min > 0.0 && eps_min < eps_max && eps_max <= 1.0)) {
    throw std::invalid_argument("dqn: need 0 < eps_min < eps_max <= 1");
  }
  if (decay < 0.0) throw std::invalid_argument("dqn: decay must be non-negative");
  if (batch < 1 || hidden < 1 || episodes < 1 || horizon < 1) {
    throw std::invalid_argument("dqn: batch, hidden, episodes and horizon must be positive");
  }
  if (actions.empty()) throw std::invalid_argument("dqn: empty action set");
  if (!(z_min < z_max)) throw std::invalid_argument("dqn: need z_min < z_max");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("dqn: learning rate must be positive");
  if (wrong_move_penalty < 0.0) throw std::invalid_argument("dqn: penalty must be non-negative");
}

double reward(double P_next, double P_now, double alpha) {
  if (!std::isfinite(P_next) || !std::isfinite(P_now)) {
    throw std::invalid_argument("reward: powers must be finite");
  }
  return P_next > P_now ? alpha : 0.0;
}

double epsilon(int episode, const TrainingConfig& cfg) {
  if (episode < 0) throw std::invalid_argument("epsilon: episode index must be non-negative");
  return cfg.eps_min + (cfg.eps_max - cfg.eps_min) * std::exp(-cfg.decay * episode);
}

int select_action(const Eigen::VectorXd& q_values, double eps, std::mt19937_64& rng,
                  const std::vector<bool>& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != q_values.size()) {
    throw std::invalid_argument("select_action: mask size does not match q vector");
  }
  std::vector<int> allowed;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) allowed.push_back(static_cast<int>(i));
  }
  if (allowed.empty()) throw std::invalid_argument("select_action: every action is masked");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < eps) {
    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    return allowed[pick(rng)];
  }
  int best = allowed.front();
  for (int a : allowed) {
    if (q_values(a) > q_values(best)) best = a;  // ties keep the lowest index
  }
  return best;
}

double td_target(double r, const Eigen::VectorXd& q_next_target, double gamma, bool terminal) {
  if (terminal) return r;
  return r + gamma * q_next_target.maxCoeff();
}

double sgd_step(QNetwork& net, const Eigen::MatrixXd& inputs, const std::vector<int>& actions,
                const Eigen::VectorXd& targets, double learning_rate,
                Eigen::MatrixXd* batch_gradient_probe) {
  const Eigen::Index m = inputs.cols();
  if (m == 0 || static_cast<Eigen::Index>(actions.size()) != m || targets.size() != m) {
    throw std::invalid_argument("sgd_step: batch, actions and targets must align");
  }

  const Eigen::MatrixXd z1 = (net.W1 * inputs).colwise() + net.b1;
  const Eigen::MatrixXd a1 = z1.array().max(0.0);
  const Eigen::MatrixXd z2 = (net.W2 * a1).colwise() + net.b2;
  const Eigen::MatrixXd a2 = z2.array().max(0.0);
  const Eigen::MatrixXd q = (net.W3 * a2).colwise() + net.b3;

  double loss = 0.0;
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double diff = targets(j) - q(actions[j], j);
    loss += diff * diff;
    dq(actions[j], j) = -2.0 * diff / static_cast<double>(m);
  }
  loss /= static_cast<double>(m);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("sgd_step: non-finite loss, training diverged");
  }
  if (batch_gradient_probe) *batch_gradient_probe = dq;

  const Eigen::MatrixXd dW3 = dq * a2.transpose();
  const Eigen::VectorXd db3 = dq.rowwise().sum();
  Eigen::MatrixXd da2 = net.W3.transpose() * dq;
  da2 = (z2.array() > 0.0).select(da2, 0.0);
  const Eigen::MatrixXd dW2 = da2 * a1.transpose();
  const Eigen::VectorXd db2 = da2.rowwise().sum();
  Eigen::MatrixXd da1 = net.W2.transpose() * da2;
  da1 = (z1.array() > 0.0).select(da1, 0.0);
  const Eigen::MatrixXd dW1 = da1 * inputs.transpose();
  const Eigen::VectorXd db1 = da1.rowwise().sum();

  net.W3 -= learning_rate * dW3;
  net.b3 -= learning_rate * db3;
  net.W2 -= learning_rate * dW2;
  net.b2 -= learning_rate * db2;
  net.W1 -= learning_rate * dW1;
  net.b1 -= learning_rate * db1;
  return loss;
}

Eigen::VectorXd planner_features(const PlannerState& s) {
  Eigen::VectorXd f(2 + s.v_local.size());
  f(0) = s.z;
  f.segment(1, s.v_local.size()) = s.v_local;
  f(f.size() - 1) = s.t_norm;
  return f;
}

PlannerState make_planner_state(double z, const SpeedLookup& speed, double t, double t_norm,
                                const TrainingConfig& cfg) {
  PlannerState s;
  s.z = z;
  s.t_norm = t_norm;
  s.v_local.resize(cfg.num_actions());
  for (int a = 0; a < cfg.num_actions(); ++a) {
    s.v_local(a) = speed(clamp_depth(z + cfg.actions[a], cfg), t);
  }
  return s;
}

double stage_reward(double z, double z_next, const SpeedLookup& speed, double t,
                    const PowerParams& power, const TrainingConfig& cfg) {
  const double p_hold = net_power(z, z, speed, t, power).net;
  const double p_move = net_power(z, z_next, speed, t, power).net;
  const double r = reward(p_move, p_hold, cfg.alpha);
  const bool moved = z_next != z;
  if (r == 0.0 && moved) return -cfg.wrong_move_penalty;
  return r;
}

EpisodeSampler fixed_field_sampler(CurrentField field) {
  auto shared = std::make_shared<CurrentField>(std::move(field));
  return [shared](int) { return *shared; };
}

EpisodeSampler shear_family_sampler(ShearKind kind, double duration_s, unsigned base_seed) {
  return [kind, duration_s, base_seed](int episode) {
    return synthesize_shear_profile(kind, duration_s,
                                    base_seed + static_cast<unsigned>(episode));
  };
}

TrainResult train(const EpisodeSampler& sampler, const TrainingConfig& cfg,
                  const PowerParams& power) {
  cfg.validate();
  power.validate();

  std::mt19937_64 rng(cfg.seed);

  const CurrentField field0 = sampler(0);
  const FeatureNorm norm = fit_feature_norm(field0, cfg, power.T_p);
  const int input_dim = 2 + cfg.num_actions();

  QNetwork net(input_dim, cfg.hidden, cfg.num_actions(), rng);
  QNetwork target = net;
  ReplayBuffer buffer(cfg.buffer_capacity);

  // Depth lattice for the seeded episode starts.
  std::vector<double> starts;
  const double step = std::abs(cfg.actions.back()) > 0 ? std::abs(cfg.actions.back()) : 5.0;
  for (double z = cfg.z_min; z <= cfg.z_max + 1e-9; z += step) starts.push_back(z);

  TrainResult result;
  result.log.reserve(cfg.episodes);
  long global_step = 0;

  for (int e = 0; e < cfg.episodes; ++e) {
    const CurrentField field = sampler(e);
    const SpeedLookup speed = [&field](double z, double t) {
      return field.at(z, std::min(t, field.duration()));
    };
    const double eps = epsilon(e, cfg);
    const double anneal =
        1.0 + (cfg.lr_final_fraction - 1.0) * (cfg.episodes > 1 ? double(e) / (cfg.episodes - 1)
                                                                : 0.0);
    const double lr = cfg.learning_rate * anneal;
    std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
    double z = starts[pick(rng)];

    EpisodeStats stats;
    stats.epsilon = eps;
    int updates = 0;

    for (int k = 0; k < cfg.horizon; ++k) {
      const double t = k * power.T_p;
      const double t_next = (k + 1) * power.T_p;
      const PlannerState s =
          make_planner_state(z, speed, t, static_cast<double>(k) / cfg.horizon, cfg);
      const auto mask = action_mask(z, cfg);
      const int a = select_action(net.forward(norm.apply(planner_features(s))), eps, rng, mask);
      const double z_next = clamp_depth(z + cfg.actions[a], cfg);

      Transition tr;
      tr.s = s;
      tr.action = a;
      tr.reward = stage_reward(z, z_next, speed, t, power, cfg);
      tr.s_next = make_planner_state(z_next, speed, t_next,
                                     static_cast<double>(k + 1) / cfg.horizon, cfg);
      tr.terminal = (k + 1 == cfg.horizon);
      stats.return_sum += tr.reward;
      buffer.push(std::move(tr));

      if (buffer.size() >= static_cast<std::size_t>(cfg.batch)) {
        const auto idx = buffer.sample_indices(cfg.batch, rng);
        Eigen::MatrixXd inputs(input_dim, cfg.batch);
        Eigen::MatrixXd next_inputs(input_dim, cfg.batch);
        std::vector<int> acts(cfg.batch);
        for (int j = 0; j < cfg.batch; ++j) {
          const Transition& t_j = buffer[idx[j]];
          inputs.col(j) = norm.apply(planner_features(t_j.s));
          next_inputs.col(j) = norm.apply(planner_features(t_j.s_next));
          acts[j] = t_j.action;
        }
        const Eigen::MatrixXd q_next = target.forward_batch(next_inputs);
        Eigen::VectorXd targets(cfg.batch);
        for (int j = 0; j < cfg.batch; ++j) {
          const Transition& t_j = buffer[idx[j]];
          // bootstrap only over actions admissible at the next state
          const auto next_mask = action_mask(t_j.s_next.z, cfg);
          Eigen::VectorXd q_valid(cfg.num_actions());
          Eigen::Index nv = 0;
          for (int a = 0; a < cfg.num_actions(); ++a) {
            if (next_mask[a]) q_valid(nv++) = q_next(a, j);
          }
          targets(j) = td_target(t_j.reward, q_valid.head(nv), cfg.gamma, t_j.terminal);
        }
        stats.mean_loss += sgd_step(net, inputs, acts, targets, lr);
        ++updates;
        ++global_step;
        if (global_step % cfg.sync_every == 0) target = net;
      }
      z = z_next;
    }
    if (updates > 0) stats.mean_loss /= updates;
    result.log.push_back(stats);
  }

  result.planner.net = std::move(net);
  result.planner.norm = norm;
  result.planner.cfg = cfg;
  result.planner.power = power;
  return result;
}

Eigen::VectorXd plan_path(const TrainedPlanner& planner, const SpeedLookup& forecast, double z0,
                          int horizon, double T_p, double t0, double episode_span) {
  if (horizon < 1) throw std::invalid_argument("plan_path: horizon must be at least 1");
  if (!planner.net.finite() || planner.net.W1.size() == 0) {
    throw std::invalid_argument("plan_path: planner network is unset or non-finite");
  }
  const TrainingConfig& cfg = planner.cfg;
  if (episode_span <= 0.0) episode_span = horizon * T_p;

  std::mt19937_64 rng(0);  // greedy path never consults it
  Eigen::VectorXd waypoints(horizon);
  double z = clamp_depth(z0, cfg);
  for (int k = 0; k < horizon; ++k) {
    const double t = t0 + k * T_p;
    const double t_norm = std::clamp(t / episode_span, 0.0, 1.0);
    const PlannerState s = make_planner_state(z, forecast, t, t_norm, cfg);
    const auto mask = action_mask(z, cfg);
    const int a = select_action(planner.net.forward(planner.norm.apply(planner_features(s))),
                                0.0, rng, mask);
    z = clamp_depth(z + cfg.actions[a], cfg);
    waypoints(k) = z;
  }
  return waypoints;
}

void save_planner(const TrainedPlanner& planner, const std::string& path) {
  json j;
  j["layers"] = {planner.net.input_dim(), static_cast<int>(planner.net.W1.rows()),
                 static_cast<int>(planner.net.W2.rows()), planner.net.output_dim()};
  j["W1"] = matrix_to_json(planner.net.W1);
  j["W2"] = matrix_to_json(planner.net.W2);
  j["W3"] = matrix_to_json(planner.net.W3);
  j["b1"] = vector_to_json(planner.net.b1);
  j["b2"] = vector_to_json(planner.net.b2);
  j["b3"] = vector_to_json(planner.net.b3);
  j["feature_mean"] = vector_to_json(planner.norm.mean);
  j["feature_std"] = vector_to_json(planner.norm.stddev);

  json cfg;
  cfg["gamma"] = planner.cfg.gamma;
  cfg["eps_min"] = planner.cfg.eps_min;
  cfg["eps_max"] = planner.cfg.eps_max;
  cfg["decay"] = planner.cfg.decay;
  cfg["alpha"] = planner.cfg.alpha;
  cfg["wrong_move_penalty"] = planner.cfg.wrong_move_penalty;
  cfg["batch"] = planner.cfg.batch;
  cfg["buffer"] = planner.cfg.buffer_capacity;
  cfg["hidden"] = planner.cfg.hidden;
  cfg["learning_rate"] = planner.cfg.learning_rate;
  cfg["sync_every"] = planner.cfg.sync_every;
  cfg["episodes"] = planner.cfg.episodes;
  cfg["horizon"] = planner.cfg.horizon;
  cfg["seed"] = planner.cfg.seed;
  cfg["actions"] = planner.cfg.actions;
  cfg["z_min"] = planner.cfg.z_min;
  cfg["z_max"] = planner.cfg.z_max;
  j["training"] = cfg;

  json pw;
  pw["rho"] = planner.power.rho;
  pw["rotor_area"] = planner.power.rotor_area;
  pw["c_p"] = planner.power.c_p;
  pw["zeta1"] = planner.power.zeta1;
  pw["zeta2"] = planner.power.zeta2;
  pw["T_p"] = planner.power.T_p;
  j["power"] = pw;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_planner: cannot open " + path);
  out << j.dump(2) << "\n";
}

TrainedPlanner load_planner(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_planner: cannot open " + path);
  json j;
  in >> j;

  TrainedPlanner p;
  p.net.W1 = matrix_from_json(j.at("W1"));
  p.net.W2 = matrix_from_json(j.at("W2"));
  p.net.W3 = matrix_from_json(j.at("W3"));
  p.net.b1 = vector_from_json(j.at("b1"));
  p.net.b2 = vector_from_json(j.at("b2"));
  p.net.b3 = vector_from_json(j.at("b3"));
  p.norm.mean = vector_from_json(j.at("feature_mean"));
  p.norm.stddev = vector_from_json(j.at("feature_std"));

  const json& cfg = j.at("training");
  p.cfg.gamma = cfg.at("gamma").get<double>();
  p.cfg.eps_min = cfg.at("eps_min").get<double>();
  p.cfg.eps_max = cfg.at("eps_max").get<double>();
  p.cfg.decay = cfg.at("decay").get<double>();
  p.cfg.alpha = cfg.at("alpha").get<double>();
  p.cfg.wrong_move_penalty = cfg.at("wrong_move_penalty").get<double>();
  p.cfg.batch = cfg.at("batch").get<int>();
  p.cfg.buffer_capacity = cfg.at("buffer").get<std::size_t>();
  p.cfg.hidden = cfg.at("hidden").get<int>();
  p.cfg.learning_rate = cfg.at("learning_rate").get<double>();
  p.cfg.sync_every = cfg.at("sync_every").get<int>();
  p.cfg.episodes = cfg.at("episodes").get<int>();
  p.cfg.horizon = cfg.at("horizon").get<int>();
  p.cfg.seed = cfg.at("seed").get<unsigned>();
  p.cfg.actions = cfg.at("actions").get<std::vector<double>>();
  p.cfg.z_min = cfg.at("z_min").get<double>();
  p.cfg.z_max = cfg.at("z_max").get<double>();

  const json& pw = j.at("power");
  p.power.rho = pw.at("rho").get<double>();
  p.power.rotor_area = pw.at("rotor_area").get<double>();
  p.power.c_p = pw.at("c_p").get<double>();
  p.power.zeta1 = pw.at("zeta1").get<double>();
  p.power.zeta2 = pw.at("zeta2").get<double>();
  p.power.T_p = pw.at("T_p").get<double>();

  if (!p.net.finite()) throw std::runtime_error("load_planner: non-finite network weights");
  return p;
}

}  // namespace mct
