#pragma once

// MPC episode execution, multi-seed evaluation, strategy comparison and the
// JSON report written by the command-line tool.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wsts/envs.hpp"
#include "wsts/planner.hpp"
#include "wsts/sequence_model.hpp"
#include "wsts/stats.hpp"
#include "wsts/trajectory.hpp"

namespace wsts {

using json = nlohmann::json;

// --- configuration --------------------------------------------------------

struct ModelConfig {
  std::size_t vocab{24};
  std::size_t k{5};
  double alpha{0.05};
  std::size_t terminal_padding{2};
};

struct EvalConfig {
  std::vector<std::uint64_t> seeds;
  std::size_t bootstrap{2000};
  std::uint64_t bootstrap_seed{0};
  std::vector<double> deltas{0.1, 0.5, 1.0, 2.0};
  std::vector<DatasetKind> datasets{DatasetKind::MediumReplay, DatasetKind::MediumExpert};
};

struct HarnessConfig {
  WindyCliffConfig env;
  DatasetKind dataset{DatasetKind::MediumReplay};  // policy.quality
  std::size_t episodes{200};                      // batch.episodes
  std::uint64_t batch_seed{1};                    // batch.seed
  double batch_gamma{1.0};
  bool record_terminal{true};
  QLearningConfig qlearning;
  ModelConfig model;
  PlannerConfig planner{16, 4, 3};
  EvalConfig eval;
};

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

inline VarianceScaling parse_scaling(const std::string& s) {
  if (s == "inflate") return VarianceScaling::Inflate;
  if (s == "damp") return VarianceScaling::Damp;
  throw std::invalid_argument("unknown variance scaling '" + s + "'");
}

inline const char* to_string(VarianceScaling v) { return v == VarianceScaling::Inflate ? "inflate" : "damp"; }

}  // namespace detail

/// Reads the structured config. Unknown keys are ignored; missing keys keep
/// their defaults. `eval.seeds` is either a count (seeds 0..n-1) or a list.
inline HarnessConfig parse_config(const json& j) {
  HarnessConfig c;
  c.eval.seeds.clear();
  for (std::uint64_t s = 0; s < 15; ++s) c.eval.seeds.push_back(s);
  if (j.contains("env")) {
    const auto& e = j["env"];
    detail::read_opt(e, "length", c.env.length);
    detail::read_opt(e, "lanes", c.env.lanes);
    detail::read_opt(e, "slip", c.env.slip);
    detail::read_opt(e, "cliff_penalty", c.env.cliff_penalty);
    detail::read_opt(e, "goal_reward", c.env.goal_reward);
    detail::read_opt(e, "step_reward", c.env.step_reward);
    detail::read_opt(e, "horizon_cap", c.env.horizon_cap);
  }
  if (j.contains("policy") && j["policy"].contains("quality"))
    c.dataset = parse_dataset_kind(j["policy"]["quality"].get<std::string>());
  if (j.contains("batch")) {
    const auto& b = j["batch"];
    detail::read_opt(b, "episodes", c.episodes);
    detail::read_opt(b, "seed", c.batch_seed);
    detail::read_opt(b, "gamma", c.batch_gamma);
    detail::read_opt(b, "record_terminal", c.record_terminal);
  }
  if (j.contains("qlearning")) {
    const auto& q = j["qlearning"];
    detail::read_opt(q, "max_episodes", c.qlearning.max_episodes);
    detail::read_opt(q, "learning_rate", c.qlearning.learning_rate);
    detail::read_opt(q, "discount", c.qlearning.discount);
    detail::read_opt(q, "exploration", c.qlearning.exploration);
    detail::read_opt(q, "exploration_start", c.qlearning.exploration_start);
    detail::read_opt(q, "exploration_decay", c.qlearning.exploration_decay);
    detail::read_opt(q, "medium_threshold", c.qlearning.medium_threshold);
    detail::read_opt(q, "medium_epsilon", c.qlearning.medium_epsilon);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::read_opt(m, "vocab", c.model.vocab);
    detail::read_opt(m, "k", c.model.k);
    detail::read_opt(m, "alpha", c.model.alpha);
    detail::read_opt(m, "terminal_padding", c.model.terminal_padding);
  }
  if (j.contains("planner")) {
    const auto& p = j["planner"];
    detail::read_opt(p, "B", c.planner.beam_width);
    detail::read_opt(p, "E", c.planner.expansion_factor);
    detail::read_opt(p, "H", c.planner.horizon);
    detail::read_opt(p, "gamma", c.planner.gamma);
    detail::read_opt(p, "delta", c.planner.delta);
    detail::read_opt(p, "variance_floor", c.planner.variance_floor);
    if (p.contains("variance_scaling")) c.planner.variance_scaling = detail::parse_scaling(p["variance_scaling"]);
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    if (e.contains("seeds")) {
      c.eval.seeds.clear();
      if (e["seeds"].is_number_integer()) {
        const auto n = e["seeds"].get<std::uint64_t>();
        for (std::uint64_t s = 0; s < n; ++s) c.eval.seeds.push_back(s);
      } else {
        e["seeds"].get_to(c.eval.seeds);
      }
    }
    detail::read_opt(e, "bootstrap", c.eval.bootstrap);
    detail::read_opt(e, "bootstrap_seed", c.eval.bootstrap_seed);
    detail::read_opt(e, "deltas", c.eval.deltas);
    if (e.contains("datasets")) {
      c.eval.datasets.clear();
      for (const auto& d : e["datasets"]) c.eval.datasets.push_back(parse_dataset_kind(d.get<std::string>()));
    }
  }
  c.planner.validate();
  return c;
}

/// Canonical form of a config (every key, defaults filled in).
inline json to_json(const HarnessConfig& c) {
  json j;
  j["env"] = {{"length", c.env.length},           {"lanes", c.env.lanes},
              {"slip", c.env.slip},               {"cliff_penalty", c.env.cliff_penalty},
              {"goal_reward", c.env.goal_reward}, {"step_reward", c.env.step_reward},
              {"horizon_cap", c.env.horizon_cap}};
  j["policy"] = {{"quality", to_string(c.dataset)}};
  j["batch"] = {{"episodes", c.episodes},
                {"seed", c.batch_seed},
                {"gamma", c.batch_gamma},
                {"record_terminal", c.record_terminal}};
  j["qlearning"] = {{"max_episodes", c.qlearning.max_episodes},
                    {"learning_rate", c.qlearning.learning_rate},
                    {"discount", c.qlearning.discount},
                    {"exploration", c.qlearning.exploration},
                    {"exploration_start", c.qlearning.exploration_start},
                    {"exploration_decay", c.qlearning.exploration_decay},
                    {"medium_threshold", c.qlearning.medium_threshold},
                    {"medium_epsilon", c.qlearning.medium_epsilon}};
  j["model"] = {{"vocab", c.model.vocab},
                {"k", c.model.k},
                {"alpha", c.model.alpha},
                {"terminal_padding", c.model.terminal_padding}};
  j["planner"] = {{"B", c.planner.beam_width},
                  {"E", c.planner.expansion_factor},
                  {"H", c.planner.horizon},
                  {"gamma", c.planner.gamma},
                  {"delta", c.planner.delta},
                  {"variance_floor", c.planner.variance_floor},
                  {"variance_scaling", detail::to_string(c.planner.variance_scaling)}};
  json datasets = json::array();
  for (auto d : c.eval.datasets) datasets.push_back(to_string(d));
  j["eval"] = {{"seeds", c.eval.seeds},
               {"bootstrap", c.eval.bootstrap},
               {"bootstrap_seed", c.eval.bootstrap_seed},
               {"deltas", c.eval.deltas},
               {"datasets", datasets}};
  return j;
}

/// FNV-1a 64 of the canonical config dump, as 16 hex digits.
inline std::string config_hash(const HarnessConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- MPC ------------------------------------------------------------------

struct MPCRunner {
  std::shared_ptr<const TabularEnv> env;
  std::shared_ptr<const ConditionalCategoricalModel> model;
  std::shared_ptr<const Discretizer> discretizer;
  std::shared_ptr<const SearchStrategy> strategy;
  PlannerConfig planner{16, 4, 3};
  std::size_t horizon_cap{0};
};

struct EpisodeResult {
  double total_return{0.0};
  std::size_t steps{0};
  bool terminated{false};
};

/// Plan from the observed state, execute the first planned action, repeat
/// until the episode ends or the cap is reached. Planner seeds derive from
/// the episode seed and step index.
inline EpisodeResult run_mpc_episode(const MPCRunner& r, std::uint64_t seed, const TraceSink& trace = {}) {
  if (!r.env || !r.model || !r.discretizer || !r.strategy)
    throw std::invalid_argument("run_mpc_episode: incomplete runner");
  const auto desc = r.env->descriptor();
  if (!(desc == r.discretizer->env()) || r.model->frame_len() != desc.frame_len() ||
      r.model->vocab_size() != r.discretizer->vocab_size())
    throw std::invalid_argument("run_mpc_episode: environment, tokenizer and model dimensions disagree");

  auto env = r.env->clone();
  auto obs = env->reset(derive_seed(seed, 0));
  EpisodeResult out;
  PlannerConfig cfg = r.planner;
  for (std::size_t t = 0; t < r.horizon_cap; ++t) {
    const auto root = encode_state(obs, *r.discretizer);
    cfg.seed = derive_seed(seed, 100 + t);
    const auto plan = beam_search(root, *r.model, *r.discretizer, *r.strategy, cfg, trace);
    const auto a = env->nearest_action(first_action(plan, *r.discretizer));
    const auto step = env->step(a);
    out.total_return += step.reward;
    ++out.steps;
    obs = step.state;
    if (step.done) {
      out.terminated = true;
      break;
    }
  }
  return out;
}

// --- evaluation -----------------------------------------------------------

struct TrainedWorld {
  OfflineBatch batch;
  std::shared_ptr<const Discretizer> discretizer;
  std::shared_ptr<const TabularMarkovModel> model;
};

inline OfflineBatch build_batch(const HarnessConfig& c, DatasetKind kind) {
  WindyCliffChain env(c.env);
  return make_dataset(env, kind, c.episodes, c.batch_gamma, c.batch_seed, c.qlearning, c.record_terminal);
}

inline TrainedWorld train_world(OfflineBatch batch, const ModelConfig& m) {
  auto disc = std::make_shared<const Discretizer>(fit_discretizer(batch, m.vocab));
  auto model = std::make_shared<const TabularMarkovModel>(
      train(batch, *disc, TrainOptions{m.k, m.alpha, m.terminal_padding}));
  return {std::move(batch), std::move(disc), std::move(model)};
}

struct SeriesSummary {
  std::vector<double> returns;     // raw, one per seed
  std::vector<double> normalized;  // random = 0, optimum = 100
  double mean{0.0}, std{0.0}, median{0.0}, iqm{0.0};
  stats::Interval mean_ci, median_ci, iqm_ci;
};

/// Per-seed returns plus point estimates and percentile-bootstrap CIs of the
/// normalized scores.
inline SeriesSummary summarize(const TabularEnv& env, std::vector<double> returns, std::size_t n_bootstrap,
                               std::uint64_t bootstrap_seed) {
  SeriesSummary s;
  s.returns = std::move(returns);
  for (double r : s.returns) s.normalized.push_back(normalized_score(env, r));
  s.mean = stats::mean(s.normalized);
  s.std = stats::stddev(s.normalized);
  s.median = stats::median(s.normalized);
  s.iqm = stats::iqm(s.normalized);
  stats::Strata strata{{env.name(), s.normalized}};
  s.mean_ci = stats::stratified_bootstrap(strata, stats::Metric::Mean, n_bootstrap, bootstrap_seed);
  s.median_ci = stats::stratified_bootstrap(strata, stats::Metric::Median, n_bootstrap, bootstrap_seed);
  s.iqm_ci = stats::stratified_bootstrap(strata, stats::Metric::Iqm, n_bootstrap, bootstrap_seed);
  return s;
}

inline json to_json(const stats::Interval& i) { return {{"point", i.point}, {"lower", i.lower}, {"upper", i.upper}}; }

inline json to_json(const SeriesSummary& s) {
  return {{"returns", s.returns},   {"normalized", s.normalized}, {"mean", s.mean},
          {"std", s.std},           {"median", s.median},         {"iqm", s.iqm},
          {"mean_ci", to_json(s.mean_ci)}, {"median_ci", to_json(s.median_ci)}, {"iqm_ci", to_json(s.iqm_ci)}};
}

/// Raw episode returns of one strategy over the given seeds.
inline std::vector<double> evaluate_returns(const TabularEnv& env, const TrainedWorld& world,
                                            const std::string& strategy, const PlannerConfig& planner,
                                            const std::vector<std::uint64_t>& seeds, const TraceSink& trace = {}) {
  MPCRunner runner{env.clone(), world.model, world.discretizer, make_strategy(strategy), planner, env.horizon_cap()};
  std::vector<double> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(run_mpc_episode(runner, s, trace).total_return);
  return out;
}

struct DeltaRow {
  double delta{0.0};
  SeriesSummary summary;
};

struct DatasetComparison {
  DatasetKind dataset{DatasetKind::MediumReplay};
  std::size_t batch_transitions{0};
  double batch_mean_return{0.0};
  SeriesSummary embs;
  std::vector<DeltaRow> wsts;  // one row per swept delta
  std::size_t tuned{0};        // index into wsts
};

/// Index of the best delta row by mean normalized score; ties go to the
/// smaller delta (rows are kept in sweep order).
inline std::size_t best_delta_row(const std::vector<DeltaRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("best_delta_row: no rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool better = rows[i].summary.mean > rows[best].summary.mean ||
                        (rows[i].summary.mean == rows[best].summary.mean && rows[i].delta < rows[best].delta);
    if (better) best = i;
  }
  return best;
}

inline DatasetComparison compare_on_dataset(const HarnessConfig& c, DatasetKind kind) {
  WindyCliffChain env(c.env);
  auto world = train_world(build_batch(c, kind), c.model);
  DatasetComparison out;
  out.dataset = kind;
  out.batch_transitions = world.batch.transition_count();
  {
    double s = 0.0;
    for (const auto& t : world.batch.trajectories()) s += t.total_reward();
    out.batch_mean_return = s / static_cast<double>(world.batch.trajectories().size());
  }
  out.embs = summarize(env, evaluate_returns(env, world, "embs", c.planner, c.eval.seeds), c.eval.bootstrap,
                       c.eval.bootstrap_seed);
  for (double d : c.eval.deltas) {
    PlannerConfig p = c.planner;
    p.delta = d;
    out.wsts.push_back({d, summarize(env, evaluate_returns(env, world, "wsts", p, c.eval.seeds), c.eval.bootstrap,
                                     c.eval.bootstrap_seed)});
  }
  out.tuned = best_delta_row(out.wsts);
  return out;
}

struct StabilityVerdict {
  double wsts_std{0.0};
  double embs_std{0.0};
  double ratio{0.0};
  double wsts_iqm{0.0};
  double embs_iqm{0.0};
  bool more_stable{false};
};

inline StabilityVerdict verdict(const DatasetComparison& d) {
  const auto& w = d.wsts.at(d.tuned).summary;
  StabilityVerdict v;
  v.wsts_std = w.std;
  v.embs_std = d.embs.std;
  v.ratio = d.embs.std > 0.0 ? w.std / d.embs.std : (w.std == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  v.wsts_iqm = w.iqm;
  v.embs_iqm = d.embs.iqm;
  v.more_stable = w.std < d.embs.std;
  return v;
}

/// Pooled score of a strategy over every dataset, with stratified CIs.
inline json aggregate_report(const std::map<std::string, std::vector<double>>& strata_scores, std::size_t n_bootstrap,
                             std::uint64_t seed) {
  json j;
  for (auto m : {stats::Metric::Mean, stats::Metric::Median, stats::Metric::Iqm})
    j[stats::to_string(m)] = to_json(stats::stratified_bootstrap(strata_scores, m, n_bootstrap, seed));
  return j;
}

inline json compare_report(const HarnessConfig& c, const std::vector<DatasetComparison>& results) {
  json j;
  j["config"] = to_json(c);
  j["config_hash"] = config_hash(c);
  WindyCliffChain env(c.env);
  j["env"] = {{"name", env.name()}, {"optimal_return", optimal_return(env)}, {"random_return", random_policy_return(env)}};
  json ds = json::array();
  stats::Strata embs_strata, wsts_strata;
  for (const auto& d : results) {
    json row;
    row["dataset"] = to_string(d.dataset);
    row["batch_transitions"] = d.batch_transitions;
    row["batch_mean_return"] = d.batch_mean_return;
    row["embs"] = to_json(d.embs);
    json sweep = json::array();
    for (const auto& r : d.wsts) {
      json jr = to_json(r.summary);
      jr["delta"] = r.delta;
      sweep.push_back(jr);
    }
    row["wsts"] = sweep;
    row["tuned_delta"] = d.wsts.at(d.tuned).delta;
    auto v = verdict(d);
    row["verdict"] = {{"wsts_std", v.wsts_std}, {"embs_std", v.embs_std}, {"ratio", v.ratio},
                      {"wsts_iqm", v.wsts_iqm}, {"embs_iqm", v.embs_iqm}, {"more_stable", v.more_stable}};
    ds.push_back(row);
    embs_strata[to_string(d.dataset)] = d.embs.normalized;
    wsts_strata[to_string(d.dataset)] = d.wsts.at(d.tuned).summary.normalized;
  }
  j["datasets"] = ds;
  j["aggregate"] = {{"embs", aggregate_report(embs_strata, c.eval.bootstrap, c.eval.bootstrap_seed)},
                    {"wsts", aggregate_report(wsts_strata, c.eval.bootstrap, c.eval.bootstrap_seed)}};
  return j;
}

inline std::vector<DatasetComparison> compare_strategies(const HarnessConfig& c) {
  std::vector<DatasetComparison> out;
  for (auto kind : c.eval.datasets) out.push_back(compare_on_dataset(c, kind));
  return out;
}

/// Flat CSV rows (dataset, strategy, delta, mean, std, median, iqm, CI bounds).
inline std::string report_csv(const json& report) {
  std::string out = "dataset,strategy,delta,mean,std,median,iqm,iqm_lower,iqm_upper\n";
  auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  auto row = [&](const std::string& ds, const std::string& strat, const std::string& delta, const json& s) {
    out += ds + ',' + strat + ',' + delta + ',' + fmt(s["mean"]) + ',' + fmt(s["std"]) + ',' + fmt(s["median"]) +
           ',' + fmt(s["iqm"]) + ',' + fmt(s["iqm_ci"]["lower"]) + ',' + fmt(s["iqm_ci"]["upper"]) + '\n';
  };
  for (const auto& d : report.at("datasets")) {
    const std::string ds = d["dataset"];
    row(ds, "embs", "", d["embs"]);
    for (const auto& w : d["wsts"]) row(ds, "wsts", fmt(w["delta"]), w);
  }
  return out;
}

}  // namespace wsts
