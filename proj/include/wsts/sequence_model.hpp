#pragma once

// Autoregressive categorical model over trajectory tokens, a smoothed
// tabular Markov implementation, and moment extraction in decoded units.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wsts/random.hpp"
#include "wsts/trajectory.hpp"

namespace wsts {

/// P(next token | context) for a token whose position within the frame is
/// `slot`. Every returned vector has vocab_size() non-negative entries
/// summing to 1.
class ConditionalCategoricalModel {
 public:
  virtual ~ConditionalCategoricalModel() = default;
  [[nodiscard]] virtual std::size_t vocab_size() const = 0;
  [[nodiscard]] virtual std::size_t frame_len() const = 0;
  [[nodiscard]] virtual std::vector<double> next_token_distribution(std::span<const Token> context,
                                                                    std::size_t slot) const = 0;
};

struct SlotMoments {
  double mean{0.0};
  double variance{0.0};

  friend bool operator==(const SlotMoments&, const SlotMoments&) = default;
};

/// Mean and variance of a categorical distribution over the slot's bin
/// midpoints.
inline SlotMoments slot_moments(std::span<const double> probs, std::size_t slot,
                                const Discretizer& d) {
  if (probs.size() != d.vocab_size())
    throw std::invalid_argument("slot_moments: distribution length differs from vocabulary");
  SlotMoments m;
  for (std::size_t i = 0; i < probs.size(); ++i)
    m.mean += probs[i] * d.decode_token(slot, static_cast<Token>(i));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 0.0) continue;
    const double dev = d.decode_token(slot, static_cast<Token>(i)) - m.mean;
    m.variance += probs[i] * dev * dev;
  }
  return m;
}

struct TrainOptions {
  std::size_t order{1};  // k: context tokens
  double alpha{1.0};     // add-alpha smoothing
  /// Copies of the final frame appended to trajectories ending in a
  /// terminal frame, so terminal states are learned as absorbing.
  std::size_t terminal_padding{0};
};

/// Counts keyed by (slot, context) where the context is the last
/// min(order, position) tokens of an episode. Lower orders are counted too,
/// so a query with a short context (e.g. a planner root) has its own table;
/// order 0 is the slot marginal. Lookup falls back from the full context to
/// the slot marginal, then to uniform.
class TabularMarkovModel final : public ConditionalCategoricalModel {
 public:
  struct Counts {
    std::vector<std::uint64_t> by_token;
    std::uint64_t total{0};

    friend bool operator==(const Counts&, const Counts&) = default;
  };
  using Table = std::map<TokenSeq, Counts>;

  TabularMarkovModel(std::size_t vocab_size, std::size_t frame_len, std::size_t order, double alpha)
      : vocab_(vocab_size), frame_len_(frame_len), order_(order), alpha_(alpha), tables_(frame_len) {
    if (vocab_ < 1) throw std::invalid_argument("TabularMarkovModel: empty vocabulary");
    if (frame_len_ < 1) throw std::invalid_argument("TabularMarkovModel: frame_len must be >= 1");
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
      throw std::invalid_argument("TabularMarkovModel: alpha must be > 0");
  }

  [[nodiscard]] std::size_t vocab_size() const override { return vocab_; }
  [[nodiscard]] std::size_t frame_len() const override { return frame_len_; }
  [[nodiscard]] std::size_t order() const noexcept { return order_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] const std::vector<Table>& tables() const noexcept { return tables_; }

  /// Adds `count` observations of `token` after `context` at `slot`.
  void add_count(std::size_t slot, const TokenSeq& context, Token token, std::uint64_t count = 1) {
    if (slot >= frame_len_) throw std::out_of_range("TabularMarkovModel: slot out of range");
    if (context.size() > order_) throw std::invalid_argument("TabularMarkovModel: context longer than order");
    if (token < 0 || static_cast<std::size_t>(token) >= vocab_)
      throw std::out_of_range("TabularMarkovModel: token out of range");
    auto& c = tables_[slot][context];
    if (c.by_token.empty()) c.by_token.assign(vocab_, 0);
    c.by_token[static_cast<std::size_t>(token)] += count;
    c.total += count;
  }

  /// Counts every token position of `tokens` (an episode starting at slot 0)
  /// under each context order 0..min(order, position).
  void observe(std::span<const Token> tokens) {
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      const std::size_t slot = p % frame_len_;
      const std::size_t max_o = std::min(order_, p);
      for (std::size_t o = 0; o <= max_o; ++o) {
        TokenSeq ctx(tokens.begin() + static_cast<std::ptrdiff_t>(p - o),
                     tokens.begin() + static_cast<std::ptrdiff_t>(p));
        add_count(slot, ctx, tokens[p]);
      }
    }
  }

  [[nodiscard]] const Counts* find(std::size_t slot, const TokenSeq& context) const {
    const auto& t = tables_.at(slot);
    auto it = t.find(context);
    if (it == t.end() || it->second.total == 0) return nullptr;
    return &it->second;
  }

  [[nodiscard]] std::vector<double> next_token_distribution(std::span<const Token> context,
                                                            std::size_t slot) const override {
    if (slot >= frame_len_) throw std::out_of_range("next_token_distribution: slot out of range");
    const std::size_t o = std::min(order_, context.size());
    TokenSeq key(context.end() - static_cast<std::ptrdiff_t>(o), context.end());
    const Counts* c = find(slot, key);
    if (c == nullptr && o > 0) c = find(slot, TokenSeq{});
    std::vector<double> p(vocab_);
    if (c == nullptr) {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(vocab_));
      return p;
    }
    const double denom = static_cast<double>(c->total) + alpha_ * static_cast<double>(vocab_);
    for (std::size_t i = 0; i < vocab_; ++i)
      p[i] = (static_cast<double>(c->by_token[i]) + alpha_) / denom;
    return p;
  }

  friend bool operator==(const TabularMarkovModel& a, const TabularMarkovModel& b) {
    return a.vocab_ == b.vocab_ && a.frame_len_ == b.frame_len_ && a.order_ == b.order_ &&
           a.alpha_ == b.alpha_ && a.tables_ == b.tables_;
  }

 private:
  std::size_t vocab_;
  std::size_t frame_len_;
  std::size_t order_;
  double alpha_;
  std::vector<Table> tables_;  // indexed by slot
};

/// Tokens of a trajectory as seen by the trainer (with terminal padding).
inline TokenSeq training_tokens(const AugmentedTrajectory& traj, const Discretizer& d,
                                std::size_t terminal_padding) {
  auto enc = encode(traj, d);
  if (terminal_padding > 0 && !traj.empty() && traj.transitions().back().done) {
    const std::size_t fl = enc.frame_len;
    TokenSeq last(enc.tokens.end() - static_cast<std::ptrdiff_t>(fl), enc.tokens.end());
    for (std::size_t i = 0; i < terminal_padding; ++i)
      enc.tokens.insert(enc.tokens.end(), last.begin(), last.end());
  }
  return std::move(enc.tokens);
}

inline TabularMarkovModel train(const OfflineBatch& batch, const Discretizer& d,
                                const TrainOptions& opts) {
  if (batch.empty() || batch.transition_count() == 0)
    throw std::invalid_argument("train: empty batch");
  if (!(batch.env() == d.env())) throw std::invalid_argument("train: discretizer does not match batch");
  TabularMarkovModel model(d.vocab_size(), d.frame_len(), opts.order, opts.alpha);
  for (const auto& traj : batch.trajectories()) {
    if (traj.empty()) continue;
    model.observe(training_tokens(traj, d, opts.terminal_padding));
  }
  return model;
}

inline std::vector<double> next_token_distribution(const ConditionalCategoricalModel& model,
                                                   std::span<const Token> context,
                                                   std::size_t slot) {
  return model.next_token_distribution(context, slot);
}

struct FrameSample {
  TokenSeq tokens;  // newly sampled tokens, through the reward-to-go slot
  SlotMoments reward;
  SlotMoments rtg;
  double log_prob{0.0};
};

/// Samples tokens from the current frame position (context.size() mod
/// frame_len) through the end of the frame. Reward and reward-to-go moments
/// come from the distributions those slots were sampled from.
inline FrameSample sample_frame(const ConditionalCategoricalModel& model, const Discretizer& d,
                                std::span<const Token> context, Rng& rng) {
  const std::size_t fl = model.frame_len();
  if (fl != d.frame_len()) throw std::invalid_argument("sample_frame: model/discretizer frame mismatch");
  if (model.vocab_size() != d.vocab_size())
    throw std::invalid_argument("sample_frame: model/discretizer vocabulary mismatch");
  const std::size_t reward_slot = d.env().reward_slot();
  const std::size_t rtg_slot = d.env().rtg_slot();

  FrameSample out;
  TokenSeq ctx(context.begin(), context.end());
  for (std::size_t slot = ctx.size() % fl; slot < fl; ++slot) {
    auto probs = model.next_token_distribution(ctx, slot);
    const auto tok = static_cast<Token>(sample_categorical(probs, rng));
    out.log_prob += std::log(probs[static_cast<std::size_t>(tok)]);
    if (slot == reward_slot) out.reward = slot_moments(probs, slot, d);
    if (slot == rtg_slot) out.rtg = slot_moments(probs, slot, d);
    ctx.push_back(tok);
    out.tokens.push_back(tok);
  }
  return out;
}

}  // namespace wsts
