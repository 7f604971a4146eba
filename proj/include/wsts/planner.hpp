#pragma once

// Beam search with pluggable score/filter strategies.
//
// Each iteration expands every beam entry into E sampled frames, scores the
// pooled B*E candidates, and draws B survivors with replacement. The final
// answer is the best candidate of the last pool under the strategy's terminal
// objective.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsts/portfolio.hpp"
#include "wsts/random.hpp"
#include "wsts/sequence_model.hpp"
#include "wsts/trajectory.hpp"

namespace wsts {

/// How per-step variances are weighted when aggregated over a plan.
enum class VarianceScaling {
  Inflate,  // gamma^(-2t): later steps count as riskier
  Damp,     // gamma^(2t)
};

struct PlannerConfig {
  std::size_t beam_width{8};
  std::size_t expansion_factor{2};
  std::size_t horizon{3};
  double gamma{1.0};
  double delta{1.0};
  double variance_floor{1e-8};
  std::uint64_t seed{0};
  VarianceScaling variance_scaling{VarianceScaling::Inflate};

  void validate() const {
    if (beam_width < 1) throw std::invalid_argument("PlannerConfig: beam width must be >= 1");
    if (expansion_factor < 1) throw std::invalid_argument("PlannerConfig: expansion factor must be >= 1");
    if (horizon < 1) throw std::invalid_argument("PlannerConfig: horizon must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("PlannerConfig: gamma must lie in (0, 1]");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("PlannerConfig: delta must be >= 0");
    if (!(variance_floor > 0.0)) throw std::invalid_argument("PlannerConfig: variance floor must be > 0");
  }
};

struct BeamCandidate {
  TokenSeq tokens;                          // root followed by sampled frames
  std::vector<SlotMoments> reward_moments;  // one per simulated step
  SlotMoments rtg_moments;                  // reward-to-go of the last step
  double log_prob{0.0};
  std::size_t steps{0};
};

struct Aggregate {
  double mu{0.0};
  double sigma2{0.0};
};

/// Discounted mean and scaled variance of a candidate: steps 1..T-1 add
/// their reward moments, step T adds its reward-to-go moments.
inline Aggregate wsts_aggregate(const BeamCandidate& c, double gamma,
                                VarianceScaling scaling = VarianceScaling::Inflate) {
  if (c.steps < 1 || c.reward_moments.size() != c.steps)
    throw std::invalid_argument("wsts_aggregate: candidate needs >= 1 simulated step");
  Aggregate a;
  auto var_weight = [&](std::size_t t) {
    const double e = 2.0 * static_cast<double>(t);
    return scaling == VarianceScaling::Inflate ? std::pow(gamma, -e) : std::pow(gamma, e);
  };
  const std::size_t T = c.steps;
  for (std::size_t t = 1; t < T; ++t) {
    a.mu += std::pow(gamma, static_cast<double>(t)) * c.reward_moments[t - 1].mean;
    a.sigma2 += var_weight(t) * c.reward_moments[t - 1].variance;
  }
  a.mu += std::pow(gamma, static_cast<double>(T)) * c.rtg_moments.mean;
  a.sigma2 += var_weight(T) * c.rtg_moments.variance;
  return a;
}

/// Normalized exp(scores - max); temperature 1.
inline std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

/// B independent draws (with replacement) from `probs`.
inline std::vector<std::size_t> sample_indices(std::span<const double> probs, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = sample_categorical(probs, rng);
  return idx;
}

inline std::vector<BeamCandidate> gather(std::span<const BeamCandidate> candidates,
                                         std::span<const std::size_t> idx) {
  std::vector<BeamCandidate> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(candidates[i]);
  return out;
}

// --- WSTS -----------------------------------------------------------------

inline PortfolioProblem wsts_problem(std::span<const BeamCandidate> candidates, double delta, double gamma,
                                     double variance_floor,
                                     VarianceScaling scaling = VarianceScaling::Inflate) {
  PortfolioProblem p;
  p.delta = delta;
  p.variance_floor = variance_floor;
  p.mu.reserve(candidates.size());
  p.sigma2.reserve(candidates.size());
  for (const auto& c : candidates) {
    auto a = wsts_aggregate(c, gamma, scaling);
    p.mu.push_back(a.mu);
    p.sigma2.push_back(a.sigma2);
  }
  return p;
}

inline WeightVector wsts_score(std::span<const BeamCandidate> candidates, double delta, double gamma,
                               double variance_floor,
                               VarianceScaling scaling = VarianceScaling::Inflate) {
  if (candidates.empty()) throw std::invalid_argument("wsts_score: no candidates");
  return solve_mean_variance(wsts_problem(candidates, delta, gamma, variance_floor, scaling));
}

inline std::vector<BeamCandidate> wsts_filter(std::span<const BeamCandidate> candidates, const WeightVector& w,
                                              std::size_t beam_width, Rng& rng) {
  if (w.size() != candidates.size()) throw std::invalid_argument("wsts_filter: weight/candidate mismatch");
  auto idx = sample_indices(w.w, beam_width, rng);
  return gather(candidates, idx);
}

// --- EM-BS ----------------------------------------------------------------

/// Discounted expected reward plus reward-to-go (the WSTS mean, no risk term).
inline std::vector<double> embs_score(std::span<const BeamCandidate> candidates, double gamma) {
  std::vector<double> s;
  s.reserve(candidates.size());
  for (const auto& c : candidates) s.push_back(wsts_aggregate(c, gamma).mu);
  return s;
}

inline std::vector<BeamCandidate> embs_filter(std::span<const BeamCandidate> candidates,
                                              std::span<const double> scores, std::size_t beam_width,
                                              Rng& rng) {
  if (scores.size() != candidates.size()) throw std::invalid_argument("embs_filter: score/candidate mismatch");
  auto idx = sample_indices(softmax(scores), beam_width, rng);
  return gather(candidates, idx);
}

// --- top-K MAP ------------------------------------------------------------

inline std::vector<double> topk_score(std::span<const BeamCandidate> candidates) {
  std::vector<double> s;
  s.reserve(candidates.size());
  for (const auto& c : candidates) s.push_back(c.log_prob);
  return s;
}

inline std::vector<BeamCandidate> topk_filter(std::span<const BeamCandidate> candidates,
                                              std::span<const double> scores, std::size_t beam_width,
                                              Rng& rng) {
  if (scores.size() != candidates.size()) throw std::invalid_argument("topk_filter: score/candidate mismatch");
  auto idx = sample_indices(softmax(scores), beam_width, rng);
  return gather(candidates, idx);
}

// --- strategy plumbing ----------------------------------------------------

/// Per-iteration record of what the search saw and kept.
struct IterationTrace {
  std::size_t iteration{0};
  std::vector<double> mu;
  std::vector<double> sigma2;
  std::vector<double> weights;  // selection probabilities handed to the filter
  std::vector<std::size_t> selected;
};

using TraceSink = std::function<void(const IterationTrace&)>;

struct ScoreResult {
  std::vector<double> scores;   // strategy-specific raw scores
  std::vector<double> weights;  // selection probabilities (simplex point)
};

class SearchStrategy {
 public:
  virtual ~SearchStrategy() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual ScoreResult score(std::span<const BeamCandidate> candidates,
                                          const PlannerConfig& cfg) const = 0;
  /// Index of the candidate returned from the final pool.
  [[nodiscard]] virtual std::size_t select_best(std::span<const BeamCandidate> candidates,
                                                const PlannerConfig& cfg) const = 0;
};

namespace detail {

/// argmax mu, ties to lower sigma2, then to lower index.
inline std::size_t best_by_return(std::span<const BeamCandidate> candidates, const PlannerConfig& cfg) {
  std::size_t best = 0;
  Aggregate best_a = wsts_aggregate(candidates[0], cfg.gamma, cfg.variance_scaling);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    auto a = wsts_aggregate(candidates[i], cfg.gamma, cfg.variance_scaling);
    if (a.mu > best_a.mu || (a.mu == best_a.mu && a.sigma2 < best_a.sigma2)) {
      best = i;
      best_a = a;
    }
  }
  return best;
}

}  // namespace detail

class WstsStrategy final : public SearchStrategy {
 public:
  [[nodiscard]] std::string name() const override { return "wsts"; }
  [[nodiscard]] ScoreResult score(std::span<const BeamCandidate> candidates,
                                  const PlannerConfig& cfg) const override {
    auto w = wsts_score(candidates, cfg.delta, cfg.gamma, cfg.variance_floor, cfg.variance_scaling);
    return {w.w, w.w};
  }
  [[nodiscard]] std::size_t select_best(std::span<const BeamCandidate> candidates,
                                        const PlannerConfig& cfg) const override {
    return detail::best_by_return(candidates, cfg);
  }
};

class EmbsStrategy final : public SearchStrategy {
 public:
  [[nodiscard]] std::string name() const override { return "embs"; }
  [[nodiscard]] ScoreResult score(std::span<const BeamCandidate> candidates,
                                  const PlannerConfig& cfg) const override {
    auto s = embs_score(candidates, cfg.gamma);
    auto p = softmax(s);
    return {std::move(s), std::move(p)};
  }
  [[nodiscard]] std::size_t select_best(std::span<const BeamCandidate> candidates,
                                        const PlannerConfig& cfg) const override {
    return detail::best_by_return(candidates, cfg);
  }
};

class TopKStrategy final : public SearchStrategy {
 public:
  [[nodiscard]] std::string name() const override { return "topk"; }
  [[nodiscard]] ScoreResult score(std::span<const BeamCandidate> candidates,
                                  const PlannerConfig&) const override {
    auto s = topk_score(candidates);
    auto p = softmax(s);
    return {std::move(s), std::move(p)};
  }
  [[nodiscard]] std::size_t select_best(std::span<const BeamCandidate> candidates,
                                        const PlannerConfig&) const override {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
      if (candidates[i].log_prob > candidates[best].log_prob) best = i;
    return best;
  }
};

inline std::unique_ptr<SearchStrategy> make_strategy(const std::string& name) {
  if (name == "wsts") return std::make_unique<WstsStrategy>();
  if (name == "embs") return std::make_unique<EmbsStrategy>();
  if (name == "topk") return std::make_unique<TopKStrategy>();
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

inline BeamCandidate extend(const BeamCandidate& parent, FrameSample&& f) {
  BeamCandidate c;
  c.tokens.reserve(parent.tokens.size() + f.tokens.size());
  c.tokens = parent.tokens;
  c.tokens.insert(c.tokens.end(), f.tokens.begin(), f.tokens.end());
  c.reward_moments = parent.reward_moments;
  c.reward_moments.push_back(f.reward);
  c.rtg_moments = f.rtg;
  c.log_prob = parent.log_prob + f.log_prob;
  c.steps = parent.steps + 1;
  return c;
}

/// Plans from `root` (the tokens of the current state). The beam starts as B
/// copies of the root.
inline BeamCandidate beam_search(std::span<const Token> root, const ConditionalCategoricalModel& model,
                                 const Discretizer& d, const SearchStrategy& strategy,
                                 const PlannerConfig& cfg, const TraceSink& trace = {}) {
  cfg.validate();
  if (model.frame_len() != d.frame_len() || model.vocab_size() != d.vocab_size())
    throw std::invalid_argument("beam_search: model does not match tokenizer");
  Rng rng(cfg.seed);

  BeamCandidate root_cand;
  root_cand.tokens.assign(root.begin(), root.end());
  std::vector<BeamCandidate> beam(cfg.beam_width, root_cand);
  std::vector<BeamCandidate> pool;

  for (std::size_t it = 1; it <= cfg.horizon; ++it) {
    pool.clear();
    pool.reserve(beam.size() * cfg.expansion_factor);
    for (const auto& c : beam) {
      for (std::size_t e = 0; e < cfg.expansion_factor; ++e)
        pool.push_back(extend(c, sample_frame(model, d, c.tokens, rng)));
    }
    auto scored = strategy.score(pool, cfg);
    auto idx = sample_indices(scored.weights, cfg.beam_width, rng);
    if (trace) {
      IterationTrace rec;
      rec.iteration = it;
      for (const auto& c : pool) {
        auto a = wsts_aggregate(c, cfg.gamma, cfg.variance_scaling);
        rec.mu.push_back(a.mu);
        rec.sigma2.push_back(a.sigma2);
      }
      rec.weights = scored.weights;
      rec.selected = idx;
      trace(rec);
    }
    if (it < cfg.horizon) beam = gather(pool, idx);
  }
  return pool[strategy.select_best(pool, cfg)];
}

/// Decoded action of the first planned frame (tokens right after the root).
inline std::vector<double> first_action(const BeamCandidate& plan, const Discretizer& d) {
  const auto& env = d.env();
  if (plan.tokens.size() < env.state_dim + env.action_dim)
    throw std::invalid_argument("first_action: plan has no action tokens");
  std::vector<double> a(env.action_dim);
  for (std::size_t i = 0; i < env.action_dim; ++i)
    a[i] = d.decode_token(env.state_dim + i, plan.tokens[env.state_dim + i]);
  return a;
}

}  // namespace wsts
