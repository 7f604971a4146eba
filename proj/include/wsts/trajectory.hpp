#pragma once

// Trajectory representation, reward-to-go augmentation, per-slot
// discretization and the token frame layout (s^1..s^N, a^1..a^M, r, R).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsts {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward{0.0};
  bool done{false};

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Reward-to-go R_t = sum_{t' >= t} gamma^(t'-t) r_t'. The last entry is r_T:
/// nothing is bootstrapped beyond the recorded data.
inline std::vector<double> compute_reward_to_go(std::span<const double> rewards,
                                                double gamma) {
  if (rewards.empty()) throw std::invalid_argument("compute_reward_to_go: empty reward vector");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("compute_reward_to_go: gamma must lie in [0, 1]");
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

class AugmentedTrajectory {
 public:
  AugmentedTrajectory() = default;
  AugmentedTrajectory(std::vector<Transition> transitions, double gamma)
      : transitions_(std::move(transitions)), gamma_(gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("AugmentedTrajectory: gamma must lie in (0, 1]");
    if (transitions_.empty()) return;
    std::vector<double> rewards;
    rewards.reserve(transitions_.size());
    for (const auto& t : transitions_) rewards.push_back(t.reward);
    reward_to_go_ = compute_reward_to_go(rewards, gamma_);
  }

  [[nodiscard]] const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  [[nodiscard]] const std::vector<double>& reward_to_go() const noexcept { return reward_to_go_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] std::size_t size() const noexcept { return transitions_.size(); }
  [[nodiscard]] bool empty() const noexcept { return transitions_.empty(); }

  /// Undiscounted sum of recorded rewards.
  [[nodiscard]] double total_reward() const noexcept {
    double s = 0.0;
    for (const auto& t : transitions_) s += t.reward;
    return s;
  }

 private:
  std::vector<Transition> transitions_;
  std::vector<double> reward_to_go_;
  double gamma_{1.0};
};

struct EnvDescriptor {
  std::size_t state_dim{0};
  std::size_t action_dim{0};

  [[nodiscard]] std::size_t frame_len() const noexcept { return state_dim + action_dim + 2; }
  [[nodiscard]] std::size_t reward_slot() const noexcept { return state_dim + action_dim; }
  [[nodiscard]] std::size_t rtg_slot() const noexcept { return state_dim + action_dim + 1; }

  friend bool operator==(const EnvDescriptor&, const EnvDescriptor&) = default;
};

struct Provenance {
  std::string policy;
  std::uint64_t seed{0};

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

class OfflineBatch {
 public:
  OfflineBatch() = default;
  OfflineBatch(EnvDescriptor env, double gamma, Provenance provenance = {})
      : env_(env), gamma_(gamma), provenance_(std::move(provenance)) {
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("OfflineBatch: gamma must lie in (0, 1]");
  }

  void add(std::vector<Transition> transitions) {
    for (const auto& t : transitions) {
      if (t.state.size() != env_.state_dim || t.action.size() != env_.action_dim)
        throw std::invalid_argument("OfflineBatch: transition dimensions do not match descriptor");
    }
    trajectories_.emplace_back(std::move(transitions), gamma_);
  }

  /// Appends all trajectories of `other`; descriptors and gamma must agree.
  void append(const OfflineBatch& other) {
    if (!(other.env_ == env_)) throw std::invalid_argument("OfflineBatch::append: descriptor mismatch");
    if (other.gamma_ != gamma_) throw std::invalid_argument("OfflineBatch::append: gamma mismatch");
    trajectories_.insert(trajectories_.end(), other.trajectories_.begin(), other.trajectories_.end());
  }

  [[nodiscard]] const EnvDescriptor& env() const noexcept { return env_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] const Provenance& provenance() const noexcept { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = std::move(p); }
  [[nodiscard]] const std::vector<AugmentedTrajectory>& trajectories() const noexcept {
    return trajectories_;
  }
  [[nodiscard]] bool empty() const noexcept { return trajectories_.empty(); }
  [[nodiscard]] std::size_t transition_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : trajectories_) n += t.size();
    return n;
  }

 private:
  EnvDescriptor env_{};
  double gamma_{1.0};
  Provenance provenance_{};
  std::vector<AugmentedTrajectory> trajectories_;
};

/// Value of frame slot `slot` at timestep `step` of an augmented trajectory.
inline double slot_value(const AugmentedTrajectory& traj, std::size_t step, std::size_t slot,
                         const EnvDescriptor& env) {
  const auto& tr = traj.transitions()[step];
  if (slot < env.state_dim) return tr.state[slot];
  if (slot < env.reward_slot()) return tr.action[slot - env.state_dim];
  if (slot == env.reward_slot()) return tr.reward;
  return traj.reward_to_go()[step];
}

/// Uniform-width bins per frame slot. Interior edges tie to the higher bin,
/// the slot maximum maps to the last bin, out-of-range values clamp.
class Discretizer {
 public:
  struct SlotRange {
    double lo{0.0};
    double hi{0.0};
    bool degenerate{false};

    friend bool operator==(const SlotRange&, const SlotRange&) = default;
  };

  Discretizer() = default;
  Discretizer(EnvDescriptor env, std::size_t vocab_size, std::vector<SlotRange> ranges)
      : env_(env), vocab_(vocab_size), ranges_(std::move(ranges)) {
    if (vocab_ < 2) throw std::invalid_argument("Discretizer: vocab_size must be >= 2");
    if (ranges_.size() != env_.frame_len())
      throw std::invalid_argument("Discretizer: one range per frame slot required");
    for (auto& r : ranges_) {
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.hi < r.lo)
        throw std::invalid_argument("Discretizer: invalid slot range");
      r.degenerate = (r.hi == r.lo);
    }
  }

  [[nodiscard]] const EnvDescriptor& env() const noexcept { return env_; }
  [[nodiscard]] std::size_t vocab_size() const noexcept { return vocab_; }
  [[nodiscard]] std::size_t frame_len() const noexcept { return env_.frame_len(); }
  [[nodiscard]] const std::vector<SlotRange>& ranges() const noexcept { return ranges_; }
  [[nodiscard]] bool degenerate(std::size_t slot) const { return ranges_.at(slot).degenerate; }

  [[nodiscard]] double bin_width(std::size_t slot) const {
    const auto& r = ranges_.at(slot);
    return r.degenerate ? 0.0 : (r.hi - r.lo) / static_cast<double>(vocab_);
  }

  /// Edge i of slot (i in [0, V]); edge V is the slot maximum.
  [[nodiscard]] double edge(std::size_t slot, std::size_t i) const {
    const auto& r = ranges_.at(slot);
    if (i >= vocab_) return r.hi;
    return r.lo + static_cast<double>(i) * bin_width(slot);
  }

  [[nodiscard]] std::vector<double> edges(std::size_t slot) const {
    std::vector<double> e(vocab_ + 1);
    for (std::size_t i = 0; i <= vocab_; ++i) e[i] = edge(slot, i);
    return e;
  }

  /// Bin index of `v`; `clamped` is set when v lies outside [lo, hi].
  [[nodiscard]] Token encode_value(std::size_t slot, double v, bool* clamped = nullptr) const {
    const auto& r = ranges_.at(slot);
    bool out = !(v >= r.lo && v <= r.hi);
    if (clamped) *clamped = out;
    if (r.degenerate) return 0;
    if (v <= r.lo || std::isnan(v)) return 0;
    if (v >= r.hi) return static_cast<Token>(vocab_ - 1);
    auto b = static_cast<std::size_t>(std::floor((v - r.lo) / bin_width(slot)));
    b = std::min(b, vocab_ - 1);
    // Settle float rounding against the materialized edges.
    while (b + 1 < vocab_ && v >= edge(slot, b + 1)) ++b;
    while (b > 0 && v < edge(slot, b)) --b;
    return static_cast<Token>(b);
  }

  /// Bin midpoint of `token`.
  [[nodiscard]] double decode_token(std::size_t slot, Token token) const {
    const auto& r = ranges_.at(slot);
    if (token < 0 || static_cast<std::size_t>(token) >= vocab_)
      throw std::out_of_range("Discretizer::decode_token: token outside vocabulary");
    if (r.degenerate) return r.lo;
    return r.lo + (static_cast<double>(token) + 0.5) * bin_width(slot);
  }

  /// Midpoints of every bin of a slot, indexed by token.
  [[nodiscard]] std::vector<double> midpoints(std::size_t slot) const {
    std::vector<double> m(vocab_);
    for (std::size_t i = 0; i < vocab_; ++i) m[i] = decode_token(slot, static_cast<Token>(i));
    return m;
  }

  friend bool operator==(const Discretizer&, const Discretizer&) = default;

 private:
  EnvDescriptor env_{};
  std::size_t vocab_{0};
  std::vector<SlotRange> ranges_;
};

/// Fits V uniform bins per slot over the observed [min, max] of the batch.
inline Discretizer fit_discretizer(const OfflineBatch& batch, std::size_t vocab_size) {
  if (vocab_size < 2) throw std::invalid_argument("fit_discretizer: vocab_size must be >= 2");
  if (batch.empty() || batch.transition_count() == 0)
    throw std::invalid_argument("fit_discretizer: empty batch");
  const auto& env = batch.env();
  std::vector<Discretizer::SlotRange> ranges(env.frame_len());
  for (auto& r : ranges) {
    r.lo = std::numeric_limits<double>::infinity();
    r.hi = -std::numeric_limits<double>::infinity();
  }
  for (const auto& traj : batch.trajectories()) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      for (std::size_t s = 0; s < env.frame_len(); ++s) {
        double v = slot_value(traj, t, s, env);
        if (!std::isfinite(v)) throw std::invalid_argument("fit_discretizer: non-finite value in batch");
        ranges[s].lo = std::min(ranges[s].lo, v);
        ranges[s].hi = std::max(ranges[s].hi, v);
      }
    }
  }
  return Discretizer(env, vocab_size, std::move(ranges));
}

struct TokenizedTrajectory {
  TokenSeq tokens;
  std::size_t frame_len{0};
  std::size_t horizon{0};
  /// Number of values that fell outside the fitted range and were clamped.
  std::size_t clamps{0};
};

inline TokenizedTrajectory encode(const AugmentedTrajectory& traj, const Discretizer& d) {
  const auto& env = d.env();
  TokenizedTrajectory out;
  out.frame_len = env.frame_len();
  out.horizon = traj.size();
  out.tokens.reserve(out.horizon * out.frame_len);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& tr = traj.transitions()[t];
    if (tr.state.size() != env.state_dim || tr.action.size() != env.action_dim)
      throw std::invalid_argument("encode: trajectory dimensions do not match discretizer");
    for (std::size_t s = 0; s < out.frame_len; ++s) {
      bool clamped = false;
      out.tokens.push_back(d.encode_value(s, slot_value(traj, t, s, env), &clamped));
      if (clamped) ++out.clamps;
    }
  }
  return out;
}

/// Tokens of a bare state vector (the planner root).
inline TokenSeq encode_state(std::span<const double> state, const Discretizer& d,
                             std::size_t* clamps = nullptr) {
  if (state.size() != d.env().state_dim)
    throw std::invalid_argument("encode_state: state dimension mismatch");
  TokenSeq out;
  out.reserve(state.size());
  for (std::size_t s = 0; s < state.size(); ++s) {
    bool c = false;
    out.push_back(d.encode_value(s, state[s], &c));
    if (c && clamps) ++*clamps;
  }
  return out;
}

inline double decode_token(std::size_t slot, Token token, const Discretizer& d) {
  return d.decode_token(slot, token);
}

}  // namespace wsts
