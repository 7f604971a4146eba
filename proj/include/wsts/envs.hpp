#pragma once

// Small stochastic MDPs with exact dynamic programming, behaviour policies,
// and offline batch generation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wsts/random.hpp"
#include "wsts/trajectory.hpp"

namespace wsts {

struct Outcome {
  double prob{0.0};
  std::size_t next{0};  // ignored when terminal
  double reward{0.0};
  bool terminal{false};
  std::vector<double> terminal_observation;  // set when terminal
};

struct StepResult {
  std::vector<double> state;
  double reward{0.0};
  bool done{false};
};

/// Finite MDP with vector observations and a start state. Stepping keeps its
/// own random stream seeded by reset().
class TabularEnv {
 public:
  virtual ~TabularEnv() = default;

  [[nodiscard]] virtual EnvDescriptor descriptor() const = 0;
  [[nodiscard]] virtual std::size_t num_states() const = 0;
  [[nodiscard]] virtual std::size_t num_actions() const = 0;
  [[nodiscard]] virtual std::size_t start_state() const = 0;
  [[nodiscard]] virtual std::vector<double> observation(std::size_t s) const = 0;
  [[nodiscard]] virtual std::vector<double> action_vector(std::size_t a) const = 0;
  /// Outcome distribution of taking `a` in `s`; probabilities sum to 1.
  [[nodiscard]] virtual std::vector<Outcome> outcomes(std::size_t s, std::size_t a) const = 0;
  [[nodiscard]] virtual std::size_t horizon_cap() const = 0;
  /// Inclusive bounds on any single reward.
  [[nodiscard]] virtual std::pair<double, double> reward_range() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::unique_ptr<TabularEnv> clone() const = 0;

  std::vector<double> reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = start_state();
    done_ = false;
    steps_ = 0;
    terminal_obs_.clear();
    return observation(state_);
  }

  StepResult step(std::size_t a) {
    if (done_) throw std::logic_error("step called after episode end");
    if (a >= num_actions()) throw std::out_of_range("step: invalid action");
    auto outs = outcomes(state_, a);
    std::vector<double> probs;
    probs.reserve(outs.size());
    for (const auto& o : outs) probs.push_back(o.prob);
    const auto& o = outs[sample_categorical(probs, rng_)];
    ++steps_;
    StepResult r;
    r.reward = o.reward;
    if (o.terminal) {
      done_ = true;
      terminal_obs_ = o.terminal_observation;
      r.state = terminal_obs_;
      r.done = true;
    } else {
      state_ = o.next;
      r.state = observation(state_);
      r.done = false;
    }
    return r;
  }

  /// Index of the action whose vector is nearest (Euclidean) to `v`.
  [[nodiscard]] std::size_t nearest_action(std::span<const double> v) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < num_actions(); ++a) {
      auto av = action_vector(a);
      if (av.size() != v.size()) throw std::invalid_argument("nearest_action: dimension mismatch");
      double d = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) d += (av[i] - v[i]) * (av[i] - v[i]);
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    return best;
  }

  [[nodiscard]] std::size_t current_state() const noexcept { return state_; }
  [[nodiscard]] bool done() const noexcept { return done_; }
  [[nodiscard]] std::size_t steps_taken() const noexcept { return steps_; }
  [[nodiscard]] const std::vector<double>& terminal_observation() const noexcept { return terminal_obs_; }

 private:
  Rng rng_{0};
  std::size_t state_{0};
  bool done_{false};
  std::size_t steps_{0};
  std::vector<double> terminal_obs_;
};

// --- windy cliff chain ----------------------------------------------------

struct WindyCliffConfig {
  std::size_t length{8};  // columns; the goal is the last column
  std::size_t lanes{2};   // lane 0 borders the cliff
  double slip{0.1};
  double cliff_penalty{10.0};
  double goal_reward{10.0};
  double step_reward{-1.0};
  std::size_t horizon_cap{24};
};

/// A ledge of `lanes` x `length` cells. Actions: 0 = forward, 1 = away from
/// the cliff, 2 = toward the cliff. With probability 1 - slip the intended
/// move executes, otherwise one of the other two, uniformly. Stepping toward
/// the cliff from lane 0 falls off (penalty, terminal); entering the last
/// column reaches the goal (terminal). Observations are (column, lane);
/// a fall is observed as lane -1.
class WindyCliffChain final : public TabularEnv {
 public:
  explicit WindyCliffChain(WindyCliffConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.length < 2) throw std::invalid_argument("WindyCliffChain: length must be >= 2");
    if (cfg_.lanes < 1) throw std::invalid_argument("WindyCliffChain: need at least one lane");
    if (!(cfg_.slip >= 0.0 && cfg_.slip <= 1.0)) throw std::invalid_argument("WindyCliffChain: slip must lie in [0, 1]");
  }

  [[nodiscard]] const WindyCliffConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] EnvDescriptor descriptor() const override { return {2, 1}; }
  [[nodiscard]] std::size_t num_states() const override { return cfg_.length * cfg_.lanes; }
  [[nodiscard]] std::size_t num_actions() const override { return 3; }
  [[nodiscard]] std::size_t start_state() const override { return 0; }
  [[nodiscard]] std::size_t horizon_cap() const override { return cfg_.horizon_cap; }
  [[nodiscard]] std::string name() const override { return "windy-cliff-chain"; }
  [[nodiscard]] std::unique_ptr<TabularEnv> clone() const override { return std::make_unique<WindyCliffChain>(cfg_); }
  [[nodiscard]] std::pair<double, double> reward_range() const override {
    return {std::min({-cfg_.cliff_penalty, cfg_.step_reward, cfg_.goal_reward}),
            std::max({-cfg_.cliff_penalty, cfg_.step_reward, cfg_.goal_reward})};
  }

  [[nodiscard]] std::size_t index(std::size_t column, std::size_t lane) const { return lane * cfg_.length + column; }
  [[nodiscard]] std::vector<double> observation(std::size_t s) const override {
    return {static_cast<double>(s % cfg_.length), static_cast<double>(s / cfg_.length)};
  }
  [[nodiscard]] std::vector<double> action_vector(std::size_t a) const override { return {static_cast<double>(a)}; }

  /// Deterministic effect of executing move `m` in state `s`.
  [[nodiscard]] Outcome move(std::size_t s, std::size_t m) const {
    const std::size_t x = s % cfg_.length, y = s / cfg_.length;
    Outcome o;
    if (x + 1 >= cfg_.length) {
      // goal column: unreachable in play, absorbing for the DP sweeps
      o.terminal = true;
      o.terminal_observation = observation(s);
      return o;
    }
    switch (m) {
      case 0:
        if (x + 1 == cfg_.length - 1) {
          o.reward = cfg_.goal_reward;
          o.terminal = true;
          o.terminal_observation = {static_cast<double>(x + 1), static_cast<double>(y)};
        } else {
          o.reward = cfg_.step_reward;
          o.next = index(x + 1, y);
        }
        break;
      case 1:
        o.reward = cfg_.step_reward;
        o.next = index(x, std::min(y + 1, cfg_.lanes - 1));
        break;
      case 2:
        if (y == 0) {
          o.reward = -cfg_.cliff_penalty;
          o.terminal = true;
          o.terminal_observation = {static_cast<double>(x), -1.0};
        } else {
          o.reward = cfg_.step_reward;
          o.next = index(x, y - 1);
        }
        break;
      default:
        throw std::out_of_range("WindyCliffChain: invalid move");
    }
    return o;
  }

  [[nodiscard]] std::vector<Outcome> outcomes(std::size_t s, std::size_t a) const override {
    if (s >= num_states() || a >= 3) throw std::out_of_range("WindyCliffChain::outcomes: bad index");
    std::vector<Outcome> out;
    for (std::size_t m = 0; m < 3; ++m) {
      const double p = (m == a) ? 1.0 - cfg_.slip : cfg_.slip / 2.0;
      if (p <= 0.0) continue;
      auto o = move(s, m);
      o.prob = p;
      out.push_back(std::move(o));
    }
    return out;
  }

 private:
  WindyCliffConfig cfg_;
};

// --- two-state toy chain --------------------------------------------------

/// Two states, two actions; action a moves to state a with probability
/// `stick`, otherwise to the other state. The reward of (s, a) is
/// mean[s][a] +/- spread with equal probability. Episodes last `horizon`
/// steps and end by time-out (no terminal frames).
struct ToyChainConfig {
  double mean[2][2]{{1.0, 0.0}, {0.0, 2.0}};
  double spread{0.5};
  double stick{1.0};
  std::size_t horizon{3};
};

class ToyChain final : public TabularEnv {
 public:
  explicit ToyChain(ToyChainConfig cfg = {}) : cfg_(cfg) {}

  [[nodiscard]] const ToyChainConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] EnvDescriptor descriptor() const override { return {1, 1}; }
  [[nodiscard]] std::size_t num_states() const override { return 2; }
  [[nodiscard]] std::size_t num_actions() const override { return 2; }
  [[nodiscard]] std::size_t start_state() const override { return 0; }
  [[nodiscard]] std::size_t horizon_cap() const override { return cfg_.horizon; }
  [[nodiscard]] std::string name() const override { return "toy-chain"; }
  [[nodiscard]] std::unique_ptr<TabularEnv> clone() const override { return std::make_unique<ToyChain>(cfg_); }
  [[nodiscard]] std::pair<double, double> reward_range() const override {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto& row : cfg_.mean)
      for (double m : row) {
        lo = std::min(lo, m - cfg_.spread);
        hi = std::max(hi, m + cfg_.spread);
      }
    return {lo, hi};
  }
  [[nodiscard]] std::vector<double> observation(std::size_t s) const override { return {static_cast<double>(s)}; }
  [[nodiscard]] std::vector<double> action_vector(std::size_t a) const override { return {static_cast<double>(a)}; }

  [[nodiscard]] std::vector<Outcome> outcomes(std::size_t s, std::size_t a) const override {
    if (s >= 2 || a >= 2) throw std::out_of_range("ToyChain::outcomes: bad index");
    std::vector<Outcome> out;
    for (std::size_t next = 0; next < 2; ++next) {
      const double pn = (next == a) ? cfg_.stick : 1.0 - cfg_.stick;
      if (pn <= 0.0) continue;
      for (double sign : {-1.0, 1.0}) {
        Outcome o;
        o.prob = pn * (cfg_.spread > 0.0 ? 0.5 : (sign < 0 ? 1.0 : 0.0));
        if (o.prob <= 0.0) continue;
        o.next = next;
        o.reward = cfg_.mean[s][a] + sign * cfg_.spread;
        out.push_back(std::move(o));
      }
    }
    return out;
  }

 private:
  ToyChainConfig cfg_;
};

// --- exact dynamic programming --------------------------------------------

/// Stochastic stationary policy: probs[s][a].
using PolicyTable = std::vector<std::vector<double>>;

inline PolicyTable uniform_policy(const TabularEnv& env) {
  return PolicyTable(env.num_states(),
                     std::vector<double>(env.num_actions(), 1.0 / static_cast<double>(env.num_actions())));
}

/// Expected undiscounted return of `policy` from every state with `steps`
/// steps remaining.
inline std::vector<double> evaluate_policy(const TabularEnv& env, const PolicyTable& policy, std::size_t steps) {
  std::vector<double> v(env.num_states(), 0.0), next(env.num_states());
  for (std::size_t h = 0; h < steps; ++h) {
    for (std::size_t s = 0; s < env.num_states(); ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < env.num_actions(); ++a) {
        if (policy[s][a] == 0.0) continue;
        double q = 0.0;
        for (const auto& o : env.outcomes(s, a)) q += o.prob * (o.reward + (o.terminal ? 0.0 : v[o.next]));
        acc += policy[s][a] * q;
      }
      next[s] = acc;
    }
    v.swap(next);
  }
  return v;
}

struct FiniteHorizonSolution {
  /// value[h][s]: optimal expected return with h steps remaining.
  std::vector<std::vector<double>> value;
  /// q[h][s][a] for h >= 1.
  std::vector<std::vector<std::vector<double>>> q;

  [[nodiscard]] std::size_t best_action(std::size_t steps_left, std::size_t s) const {
    const auto& row = q.at(steps_left).at(s);
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
};

/// Backward induction over `steps` steps (undiscounted).
inline FiniteHorizonSolution value_iteration(const TabularEnv& env, std::size_t steps) {
  const std::size_t S = env.num_states(), A = env.num_actions();
  FiniteHorizonSolution sol;
  sol.value.assign(steps + 1, std::vector<double>(S, 0.0));
  sol.q.assign(steps + 1, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
  for (std::size_t h = 1; h <= steps; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        double q = 0.0;
        for (const auto& o : env.outcomes(s, a))
          q += o.prob * (o.reward + (o.terminal ? 0.0 : sol.value[h - 1][o.next]));
        sol.q[h][s][a] = q;
        best = std::max(best, q);
      }
      sol.value[h][s] = best;
    }
  }
  return sol;
}

/// Optimal expected return from the start state within the horizon cap.
inline double optimal_return(const TabularEnv& env) {
  return value_iteration(env, env.horizon_cap()).value[env.horizon_cap()][env.start_state()];
}

inline double random_policy_return(const TabularEnv& env) {
  return evaluate_policy(env, uniform_policy(env), env.horizon_cap())[env.start_state()];
}

/// Maps a raw return so the uniform-random policy scores 0 and the optimum 100.
inline double normalized_score(const TabularEnv& env, double raw) {
  const double lo = random_policy_return(env), hi = optimal_return(env);
  if (hi == lo) return 0.0;
  return 100.0 * (raw - lo) / (hi - lo);
}

// --- behaviour policies ---------------------------------------------------

enum class PolicyQuality { Random, Medium, Expert };

inline std::string to_string(PolicyQuality q) {
  switch (q) {
    case PolicyQuality::Random: return "random";
    case PolicyQuality::Medium: return "medium";
    case PolicyQuality::Expert: return "expert";
  }
  return "?";
}

/// Epsilon-greedy over a stationary action-value table (uniform if empty).
struct BehaviorPolicy {
  PolicyQuality quality{PolicyQuality::Random};
  double epsilon{0.0};
  std::vector<std::vector<double>> q;  // q[s][a]

  /// Actions attaining the row maximum (ties share the greedy mass).
  [[nodiscard]] static std::vector<std::size_t> greedy_set(const std::vector<double>& row) {
    const double best = *std::max_element(row.begin(), row.end());
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < row.size(); ++a)
      if (row[a] == best) out.push_back(a);
    return out;
  }

  [[nodiscard]] PolicyTable table(const TabularEnv& env) const {
    const std::size_t A = env.num_actions();
    if (q.empty()) return uniform_policy(env);
    PolicyTable pt(env.num_states(), std::vector<double>(A, epsilon / static_cast<double>(A)));
    for (std::size_t s = 0; s < env.num_states(); ++s) {
      const auto g = greedy_set(q[s]);
      for (auto a : g) pt[s][a] += (1.0 - epsilon) / static_cast<double>(g.size());
    }
    return pt;
  }

  std::size_t act(std::size_t s, std::size_t num_actions, Rng& rng) const {
    if (q.empty() || uniform01(rng) < epsilon)
      return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(num_actions)) % num_actions;
    const auto g = greedy_set(q.at(s));
    if (g.size() == 1) return g[0];
    return g[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(g.size())) % g.size()];
  }
};

/// Greedy policy of the finite-horizon optimum's first-step action values
/// with the full horizon remaining (stationary approximation).
inline BehaviorPolicy expert_policy(const TabularEnv& env, double epsilon = 0.0) {
  auto sol = value_iteration(env, env.horizon_cap());
  return {PolicyQuality::Expert, epsilon, sol.q[env.horizon_cap()]};
}

struct RolloutOptions {
  double gamma{1.0};
  /// Append an absorbing frame (terminal observation, zero action, zero
  /// reward, done) after a terminal transition.
  bool record_terminal{true};
};

/// One episode of `policy`; the final transition carries done when the
/// episode terminated rather than timed out.
inline std::vector<Transition> rollout(TabularEnv& env, const BehaviorPolicy& policy, std::uint64_t seed,
                                       const RolloutOptions& opts) {
  Rng act_rng(derive_seed(seed, 1));
  env.reset(derive_seed(seed, 0));
  std::vector<Transition> out;
  for (std::size_t t = 0; t < env.horizon_cap(); ++t) {
    const std::size_t s = env.current_state();
    const std::size_t a = policy.act(s, env.num_actions(), act_rng);
    Transition tr{env.observation(s), env.action_vector(a), 0.0, false};
    auto r = env.step(a);
    tr.reward = r.reward;
    tr.done = r.done;
    out.push_back(std::move(tr));
    if (r.done) {
      if (opts.record_terminal)
        out.push_back(Transition{r.state, std::vector<double>(env.descriptor().action_dim, 0.0), 0.0, true});
      break;
    }
  }
  return out;
}

inline OfflineBatch generate_batch(TabularEnv& env, const BehaviorPolicy& policy, std::size_t episodes,
                                   double gamma, std::uint64_t seed, bool record_terminal = true) {
  if (episodes < 1) throw std::invalid_argument("generate_batch: episodes must be >= 1");
  OfflineBatch batch(env.descriptor(), gamma, Provenance{to_string(policy.quality), seed});
  for (std::size_t e = 0; e < episodes; ++e)
    batch.add(rollout(env, policy, derive_seed(seed, e), RolloutOptions{gamma, record_terminal}));
  return batch;
}

/// Sum of environment rewards of a recorded episode.
inline double episode_return(const AugmentedTrajectory& t) { return t.total_reward(); }

// --- Q-learning and dataset qualities -------------------------------------

struct QLearningConfig {
  std::size_t max_episodes{2000};
  double learning_rate{0.2};
  double discount{0.99};
  /// With exploration_decay > 0, epsilon decays linearly from
  /// exploration_start to exploration over that many episodes.
  double exploration{0.3};
  double exploration_start{1.0};
  std::size_t exploration_decay{0};
  double initial_q{0.0};
  /// Normalized score at which the greedy policy counts as "medium".
  double medium_threshold{50.0};
  double medium_epsilon{0.2};
};

struct QLearningResult {
  BehaviorPolicy medium;
  /// Every episode generated while learning, up to the medium snapshot.
  std::vector<std::vector<Transition>> replay;
  std::size_t episodes_used{0};
  double medium_score{0.0};
};

inline double greedy_normalized_score(const TabularEnv& env, const std::vector<std::vector<double>>& q,
                                      double random_return, double optimal) {
  BehaviorPolicy p{PolicyQuality::Medium, 0.0, q};
  const double raw = evaluate_policy(env, p.table(env), env.horizon_cap())[env.start_state()];
  if (optimal == random_return) return 0.0;
  return 100.0 * (raw - random_return) / (optimal - random_return);
}

inline double greedy_normalized_score(const TabularEnv& env, const std::vector<std::vector<double>>& q) {
  return greedy_normalized_score(env, q, random_policy_return(env), optimal_return(env));
}

/// Tabular Q-learning from zero-initialized values; stops at the first
/// episode after which the greedy policy reaches the medium threshold.
inline QLearningResult q_learning(TabularEnv& env, const QLearningConfig& cfg, std::uint64_t seed,
                                  bool record_terminal = true) {
  const std::size_t S = env.num_states(), A = env.num_actions();
  std::vector<std::vector<double>> q(S, std::vector<double>(A, cfg.initial_q));
  QLearningResult res;
  const double lo = random_policy_return(env), hi = optimal_return(env);
  Rng rng(derive_seed(seed, 7));
  for (std::size_t ep = 0; ep < cfg.max_episodes; ++ep) {
    env.reset(derive_seed(seed, 1000 + ep));
    std::vector<Transition> traj;
    const double frac = cfg.exploration_decay == 0
                            ? 1.0
                            : std::min(1.0, static_cast<double>(ep) / static_cast<double>(cfg.exploration_decay));
    const double eps = cfg.exploration_start + frac * (cfg.exploration - cfg.exploration_start);
    BehaviorPolicy explore{PolicyQuality::Medium, eps, q};
    for (std::size_t t = 0; t < env.horizon_cap(); ++t) {
      const std::size_t s = env.current_state();
      const std::size_t a = explore.act(s, A, rng);
      auto r = env.step(a);
      traj.push_back(Transition{env.observation(s), env.action_vector(a), r.reward, r.done});
      double target = r.reward;
      if (!r.done) target += cfg.discount * *std::max_element(q[env.current_state()].begin(), q[env.current_state()].end());
      q[s][a] += cfg.learning_rate * (target - q[s][a]);
      explore.q = q;
      if (r.done) {
        if (record_terminal)
          traj.push_back(Transition{r.state, std::vector<double>(env.descriptor().action_dim, 0.0), 0.0, true});
        break;
      }
    }
    res.replay.push_back(std::move(traj));
    res.episodes_used = ep + 1;
    res.medium_score = greedy_normalized_score(env, q, lo, hi);
    if (res.medium_score >= cfg.medium_threshold) break;
  }
  res.medium = BehaviorPolicy{PolicyQuality::Medium, cfg.medium_epsilon, q};
  return res;
}

enum class DatasetKind { Random, Medium, MediumReplay, MediumExpert, Expert };

inline std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Random: return "random";
    case DatasetKind::Medium: return "medium";
    case DatasetKind::MediumReplay: return "medium-replay";
    case DatasetKind::MediumExpert: return "medium-expert";
    case DatasetKind::Expert: return "expert";
  }
  return "?";
}

inline DatasetKind parse_dataset_kind(const std::string& s) {
  for (auto k : {DatasetKind::Random, DatasetKind::Medium, DatasetKind::MediumReplay, DatasetKind::MediumExpert,
                 DatasetKind::Expert})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown dataset kind '" + s + "'");
}

/// Builds one of the dataset qualities:
///   medium        epsilon-greedy on the half-trained Q table
///   medium-replay all Q-learning episodes up to the medium snapshot
///   medium-expert `episodes` medium plus `episodes` optimal rollouts
inline OfflineBatch make_dataset(TabularEnv& env, DatasetKind kind, std::size_t episodes, double gamma,
                                 std::uint64_t seed, const QLearningConfig& qcfg = {},
                                 bool record_terminal = true) {
  const auto label = to_string(kind);
  switch (kind) {
    case DatasetKind::Random: {
      auto b = generate_batch(env, BehaviorPolicy{}, episodes, gamma, seed, record_terminal);
      b.set_provenance({label, seed});
      return b;
    }
    case DatasetKind::Expert: {
      auto b = generate_batch(env, expert_policy(env), episodes, gamma, seed, record_terminal);
      b.set_provenance({label, seed});
      return b;
    }
    case DatasetKind::Medium: {
      auto ql = q_learning(env, qcfg, seed, record_terminal);
      auto b = generate_batch(env, ql.medium, episodes, gamma, derive_seed(seed, 11), record_terminal);
      b.set_provenance({label, seed});
      return b;
    }
    case DatasetKind::MediumReplay: {
      auto ql = q_learning(env, qcfg, seed, record_terminal);
      OfflineBatch b(env.descriptor(), gamma, {label, seed});
      for (auto& t : ql.replay) b.add(std::move(t));
      return b;
    }
    case DatasetKind::MediumExpert: {
      auto ql = q_learning(env, qcfg, seed, record_terminal);
      auto b = generate_batch(env, ql.medium, episodes, gamma, derive_seed(seed, 11), record_terminal);
      b.append(generate_batch(env, expert_policy(env), episodes, gamma, derive_seed(seed, 13), record_terminal));
      b.set_provenance({label, seed});
      return b;
    }
  }
  throw std::invalid_argument("make_dataset: unknown kind");
}

}  // namespace wsts
