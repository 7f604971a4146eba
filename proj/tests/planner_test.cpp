#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "wsts/planner.hpp"

namespace wsts {
namespace {

BeamCandidate one_step(double mu, double sigma2) {
  BeamCandidate c;
  c.steps = 1;
  c.reward_moments = {{0.0, 0.0}};
  c.rtg_moments = {mu, sigma2};
  return c;
}

BeamCandidate two_step(SlotMoments r1, SlotMoments rtg) {
  BeamCandidate c;
  c.steps = 2;
  c.reward_moments = {r1, {0.0, 0.0}};
  c.rtg_moments = rtg;
  return c;
}

TEST(WstsAggregate, UnitDiscountSums) {
  auto a = wsts_aggregate(two_step({2, 1}, {4, 1}), 1.0);
  EXPECT_EQ(a.mu, 6.0);
  EXPECT_EQ(a.sigma2, 2.0);
}

TEST(WstsAggregate, HalfDiscountExample) {
  auto a = wsts_aggregate(two_step({2, 1}, {4, 1}), 0.5);
  EXPECT_EQ(a.mu, 2.0);
  EXPECT_EQ(a.sigma2, 20.0);
}

TEST(WstsAggregate, DampedVariance) {
  auto a = wsts_aggregate(two_step({2, 1}, {4, 1}), 0.5, VarianceScaling::Damp);
  EXPECT_EQ(a.mu, 2.0);
  EXPECT_EQ(a.sigma2, 0.25 + 0.0625);
}

TEST(WstsAggregate, ZeroVarianceStaysZero) {
  for (double g : {0.3, 0.9, 1.0}) EXPECT_EQ(wsts_aggregate(two_step({2, 0}, {4, 0}), g).sigma2, 0.0);
}

TEST(WstsAggregate, NeedsAtLeastOneStep) {
  BeamCandidate c;
  EXPECT_THROW(wsts_aggregate(c, 1.0), std::invalid_argument);
}

// With gamma = 1, inserting a zero-mean zero-variance step ahead of the final
// step leaves both aggregates unchanged.
TEST(WstsAggregate, ZeroStepIsNeutralAtUnitDiscount) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> m(-5, 5), v(0, 3);
  for (int trial = 0; trial < 500; ++trial) {
    BeamCandidate c;
    c.steps = 1 + rng() % 6;
    for (std::size_t t = 0; t < c.steps; ++t) c.reward_moments.push_back({m(rng), v(rng)});
    c.rtg_moments = {m(rng), v(rng)};
    BeamCandidate z = c;
    z.reward_moments.insert(z.reward_moments.end() - 1, SlotMoments{0.0, 0.0});
    z.steps += 1;
    auto a = wsts_aggregate(c, 1.0), b = wsts_aggregate(z, 1.0);
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.sigma2, b.sigma2);
  }
}

TEST(WstsScore, Examples) {
  std::vector<BeamCandidate> one{one_step(3, 1)};
  EXPECT_EQ(wsts_score(one, 1.0, 1.0, 1e-8).w, std::vector<double>{1.0});
  std::vector<BeamCandidate> same{one_step(1, 2), one_step(1, 2)};
  EXPECT_EQ(wsts_score(same, 1.0, 1.0, 1e-8).w, (std::vector<double>{0.5, 0.5}));
  std::vector<BeamCandidate> kkt{one_step(1, 1), one_step(0, 1)};
  auto w = wsts_score(kkt, 2.0, 1.0, 1e-8);
  EXPECT_NEAR(w[0], 0.75, 1e-15);
  EXPECT_NEAR(w[1], 0.25, 1e-15);
  EXPECT_THROW(wsts_score(std::vector<BeamCandidate>{}, 1.0, 1.0, 1e-8), std::invalid_argument);
}

TEST(WstsScore, TinyDeltaPointsAtBestMean) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> m(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BeamCandidate> c;
    const std::size_t n = 2 + rng() % 8;
    for (std::size_t j = 0; j < n; ++j) c.push_back(one_step(m(rng), 1.0));
    auto w = wsts_score(c, 1e-6, 1.0, 1e-8);
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (c[j].rtg_moments.mean > c[best].rtg_moments.mean) best = j;
    EXPECT_GE(w[best], 0.999);
  }
}

std::vector<double> frequencies(const std::vector<BeamCandidate>& picked, std::size_t n) {
  std::vector<double> f(n, 0.0);
  for (const auto& c : picked) f[static_cast<std::size_t>(c.rtg_moments.mean)] += 1.0;
  return f;
}

void expect_within_3_sigma(const std::vector<double>& freq, const std::vector<double>& p, double n) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double sd = std::sqrt(n * p[i] * (1 - p[i]));
    EXPECT_LE(std::abs(freq[i] - n * p[i]), 3 * sd + 1e-9) << "index " << i;
  }
}

// Candidates tagged by index through their rtg mean.
std::vector<BeamCandidate> tagged(std::size_t n) {
  std::vector<BeamCandidate> c;
  for (std::size_t j = 0; j < n; ++j) c.push_back(one_step(static_cast<double>(j), 0.0));
  return c;
}

TEST(WstsFilter, PointMassAndDeterminism) {
  auto c = tagged(3);
  Rng rng(1);
  auto picked = wsts_filter(c, WeightVector{{1, 0, 0}}, 3, rng);
  ASSERT_EQ(picked.size(), 3u);
  for (const auto& p : picked) EXPECT_EQ(p.rtg_moments.mean, 0.0);
  Rng a(9), b(9);
  EXPECT_EQ(frequencies(wsts_filter(c, WeightVector{{0.2, 0.3, 0.5}}, 50, a), 3),
            frequencies(wsts_filter(c, WeightVector{{0.2, 0.3, 0.5}}, 50, b), 3));
}

TEST(WstsFilter, FrequenciesMatchWeights) {
  auto c = tagged(2);
  Rng rng(31);
  const double n = 100000;
  expect_within_3_sigma(frequencies(wsts_filter(c, WeightVector{{0.75, 0.25}}, 100000, rng), 2), {0.75, 0.25}, n);
}

TEST(EmbsFilter, SoftmaxProbabilities) {
  std::vector<double> s{1.0, 0.0};
  auto p = softmax(s);
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(p[1], 1 / (e + 1), 1e-15);

  auto c = tagged(2);
  Rng rng(3);
  expect_within_3_sigma(frequencies(embs_filter(c, s, 100000, rng), 2), p, 100000);
}

TEST(EmbsFilter, EqualScoresAreUniformAndSingleCandidateAlwaysWins) {
  std::vector<double> s{2.0, 2.0, 2.0, 2.0};
  for (double v : softmax(s)) EXPECT_DOUBLE_EQ(v, 0.25);
  auto c = tagged(1);
  Rng rng(0);
  for (const auto& p : embs_filter(c, std::vector<double>{-50.0}, 10, rng)) EXPECT_EQ(p.rtg_moments.mean, 0.0);
}

TEST(EmbsScore, IsWstsMean) {
  std::vector<BeamCandidate> c{two_step({2, 1}, {4, 1}), one_step(3, 5)};
  EXPECT_EQ(embs_score(c, 0.5), (std::vector<double>{2.0, 1.5}));
}

TEST(TopKFilter, FrequenciesFollowProbabilities) {
  auto c = tagged(3);
  const std::vector<double> p{0.5, 0.3, 0.2};
  for (std::size_t j = 0; j < 3; ++j) c[j].log_prob = std::log(p[j]);
  auto s = topk_score(c);
  Rng rng(8);
  expect_within_3_sigma(frequencies(topk_filter(c, s, 100000, rng), 3), p, 100000);

  std::vector<double> even{std::log(0.5), std::log(0.5)};
  auto q = softmax(even);
  EXPECT_DOUBLE_EQ(q[0], 0.5);
}

// A model defined by a function of (context, slot).
class FnModel final : public ConditionalCategoricalModel {
 public:
  using Fn = std::function<std::vector<double>(std::span<const Token>, std::size_t)>;
  FnModel(std::size_t v, std::size_t fl, Fn fn) : v_(v), fl_(fl), fn_(std::move(fn)) {}
  std::size_t vocab_size() const override { return v_; }
  std::size_t frame_len() const override { return fl_; }
  std::vector<double> next_token_distribution(std::span<const Token> ctx, std::size_t slot) const override {
    return fn_(ctx, slot);
  }

 private:
  std::size_t v_, fl_;
  Fn fn_;
};

Discretizer unit_discretizer(std::size_t V) {
  return Discretizer(EnvDescriptor{1, 1}, V, {{0, 4, false}, {0, 4, false}, {0, 4, false}, {0, 4, false}});
}

std::vector<double> one_hot(std::size_t V, std::size_t i) {
  std::vector<double> p(V, 0.0);
  p[i] = 1.0;
  return p;
}

TEST(BeamSearch, NoBranchingReturnsTheSingleSample) {
  auto d = unit_discretizer(4);
  FnModel m(4, 4, [](auto, std::size_t) { return std::vector<double>{0.1, 0.2, 0.3, 0.4}; });
  PlannerConfig cfg;
  cfg.beam_width = cfg.expansion_factor = cfg.horizon = 1;
  cfg.seed = 55;
  const std::vector<Token> root{2};
  for (const char* name : {"wsts", "embs", "topk"}) {
    auto plan = beam_search(root, m, d, *make_strategy(name), cfg);
    Rng rng(55);
    auto f = sample_frame(m, d, root, rng);
    EXPECT_EQ(plan.tokens, (TokenSeq{2, f.tokens[0], f.tokens[1], f.tokens[2]}));
    EXPECT_EQ(plan.steps, 1u);
    EXPECT_DOUBLE_EQ(plan.log_prob, f.log_prob);
  }
}

TEST(BeamSearch, DeterministicModelGivesArgmaxRollout) {
  auto d = unit_discretizer(4);
  // Every slot copies (previous token + 1) mod 4.
  FnModel m(4, 4, [](std::span<const Token> ctx, std::size_t) {
    return one_hot(4, static_cast<std::size_t>((ctx.back() + 1) % 4));
  });
  PlannerConfig cfg;
  cfg.beam_width = 5;
  cfg.expansion_factor = 3;
  cfg.horizon = 2;
  for (const char* name : {"wsts", "embs", "topk"}) {
    auto plan = beam_search(std::vector<Token>{0}, m, d, *make_strategy(name), cfg);
    EXPECT_EQ(plan.tokens, (TokenSeq{0, 1, 2, 3, 0, 1, 2, 3}));
    EXPECT_EQ(plan.log_prob, 0.0);
    EXPECT_EQ(plan.reward_moments.size(), 2u);
    EXPECT_EQ(first_action(plan, d), std::vector<double>{d.decode_token(1, 1)});
  }
}

FnModel noisy_model() {
  return FnModel(6, 4, [](std::span<const Token> ctx, std::size_t slot) {
    std::vector<double> p(6);
    double z = 0;
    for (std::size_t i = 0; i < 6; ++i) z += (p[i] = 1.0 + static_cast<double>((i * 7 + slot * 3 + ctx.size()) % 5));
    for (auto& v : p) v /= z;
    return p;
  });
}

TEST(BeamSearch, BeamStaysAtWidthAndIsReproducible) {
  auto d = Discretizer(EnvDescriptor{1, 1}, 6, {{0, 6, false}, {0, 1, false}, {-1, 1, false}, {-3, 3, false}});
  auto m = noisy_model();
  PlannerConfig cfg;
  cfg.beam_width = 4;
  cfg.expansion_factor = 3;
  cfg.horizon = 4;
  cfg.gamma = 0.9;
  cfg.seed = 12;
  for (const char* name : {"wsts", "embs", "topk"}) {
    std::vector<IterationTrace> traces;
    auto plan = beam_search(std::vector<Token>{3}, m, d, *make_strategy(name), cfg,
                            [&](const IterationTrace& t) { traces.push_back(t); });
    ASSERT_EQ(traces.size(), cfg.horizon);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      EXPECT_EQ(traces[i].iteration, i + 1);
      EXPECT_EQ(traces[i].mu.size(), 12u);
      EXPECT_EQ(traces[i].selected.size(), 4u);
      double s = 0;
      for (double w : traces[i].weights) s += w;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_EQ(plan.steps, cfg.horizon);
    EXPECT_LE(plan.log_prob, 0.0);
    auto again = beam_search(std::vector<Token>{3}, m, d, *make_strategy(name), cfg);
    EXPECT_EQ(plan.tokens, again.tokens);
    EXPECT_EQ(plan.log_prob, again.log_prob);
  }
}

TEST(BeamSearch, RejectsMismatchedModelAndBadConfig) {
  auto d = unit_discretizer(4);
  FnModel wrong(5, 4, [](auto, std::size_t) { return std::vector<double>(5, 0.2); });
  PlannerConfig cfg;
  EXPECT_THROW(beam_search(std::vector<Token>{0}, wrong, d, WstsStrategy{}, cfg), std::invalid_argument);
  FnModel ok(4, 4, [](auto, std::size_t) { return std::vector<double>(4, 0.25); });
  cfg.beam_width = 0;
  EXPECT_THROW(beam_search(std::vector<Token>{0}, ok, d, WstsStrategy{}, cfg), std::invalid_argument);
  cfg = PlannerConfig{};
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(make_strategy("greedy"), std::invalid_argument);
}

TEST(SelectBest, TiesGoToLowerVarianceThenIndex) {
  std::vector<BeamCandidate> c{one_step(1, 2), one_step(1, 1), one_step(1, 1), one_step(0, 0)};
  PlannerConfig cfg;
  EXPECT_EQ(WstsStrategy{}.select_best(c, cfg), 1u);
  EXPECT_EQ(EmbsStrategy{}.select_best(c, cfg), 1u);
  c[3].log_prob = -0.1;
  for (std::size_t j = 0; j < 3; ++j) c[j].log_prob = -1.0;
  EXPECT_EQ(TopKStrategy{}.select_best(c, cfg), 3u);
}

TEST(Random, CategoricalSkipsZeroWeights) {
  Rng rng(1);
  std::vector<double> w{0.0, 1.0, 0.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_categorical(w, rng), 1u);
  std::vector<double> none{0.0, 0.0};
  EXPECT_THROW(sample_categorical(none, rng), std::invalid_argument);
}

TEST(Random, Uniform01InUnitInterval) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

}  // namespace
}  // namespace wsts
