#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "wsts/batch_io.hpp"
#include "wsts/harness.hpp"
#include "wsts/model_io.hpp"

namespace fs = std::filesystem;
using namespace wsts;

namespace {

fs::path out_dir() {
  const char* env = std::getenv("WSTS_OUT_DIR");
  fs::path dir = (env && *env) ? fs::path(env) : fs::path("wsts-out");
  fs::create_directories(dir);
  return dir;
}

HarnessConfig load_config(const std::string& path) {
  if (path.empty()) return parse_config(json::object());
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  return parse_config(json::parse(is));
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
  std::cout << p.string() << '\n';
}

// Pretty JSON with a trailing newline; fixed key order makes it byte-stable.
std::string dump(const json& j) { return j.dump(2) + '\n'; }

TrainedWorld world_for(const HarnessConfig& c, const std::string& batch_path, const std::string& model_path) {
  if (!model_path.empty()) {
    auto bundle = load_model(model_path);
    TrainedWorld w;
    w.discretizer = std::make_shared<const Discretizer>(std::move(bundle.discretizer));
    w.model = std::make_shared<const TabularMarkovModel>(std::move(bundle.model));
    return w;
  }
  auto batch = batch_path.empty() ? build_batch(c, c.dataset) : load_batch(batch_path);
  return train_world(std::move(batch), c.model);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-variance beam search planner toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config file (defaults apply to missing keys)")
      ->check(CLI::ExistingFile);
  app.fallthrough();

  auto* gen = app.add_subcommand("gen-batch", "Generate the offline batch named by policy.quality");

  auto* trn = app.add_subcommand("train-model", "Fit the tokenizer and sequence model");
  std::string batch_in;
  trn->add_option("--batch", batch_in, "Batch file (default: generate from config)")->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Plan and act with MPC over the eval seeds");
  std::string model_in, strategy = "wsts";
  bool trace = false;
  std::vector<std::uint64_t> run_seeds;
  run->add_option("--model", model_in, "Model file (default: train from config)")->check(CLI::ExistingFile);
  run->add_option("--batch", batch_in, "Batch file to train on when no model is given")->check(CLI::ExistingFile);
  run->add_option("--strategy", strategy, "wsts, embs or topk")->check(CLI::IsMember({"wsts", "embs", "topk"}));
  run->add_option("--seed", run_seeds, "Episode seeds (default: eval.seeds)");
  run->add_flag("--trace", trace, "Write per-iteration planner traces as JSON lines");

  auto* cmp = app.add_subcommand("compare", "Sweep delta for WSTS against EM-BS on eval.datasets");

  auto* rep = app.add_subcommand("report", "Flatten a compare result to CSV");
  std::string compare_in;
  rep->add_option("--input", compare_in, "Compare JSON (default: the one matching the config)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_config(config_path);
    const std::string hash = config_hash(cfg);
    const auto dir = out_dir();

    if (*gen) {
      auto batch = build_batch(cfg, cfg.dataset);
      std::ostringstream os;
      write_batch(os, batch, hash);
      write_text(dir / ("batch-" + hash + ".csv"), os.str());
    } else if (*trn) {
      auto w = world_for(cfg, batch_in, "");
      std::ostringstream os;
      write_model(os, *w.model, *w.discretizer, hash);
      write_text(dir / ("model-" + hash + ".txt"), os.str());
    } else if (*run) {
      WindyCliffChain env(cfg.env);
      auto w = world_for(cfg, batch_in, model_in);
      const auto seeds = run_seeds.empty() ? cfg.eval.seeds : run_seeds;
      std::ostringstream lines;
      std::uint64_t current = 0;
      std::size_t step = 0;
      TraceSink sink;
      if (trace) {
        sink = [&](const IterationTrace& t) {
          if (t.iteration == 1) ++step;
          json j{{"config_hash", hash}, {"seed", current},      {"step", step},       {"iteration", t.iteration},
                 {"mu", t.mu},          {"sigma2", t.sigma2},   {"weights", t.weights}, {"selected", t.selected}};
          lines << j.dump() << '\n';
        };
      }
      MPCRunner runner{env.clone(), w.model, w.discretizer, make_strategy(strategy), cfg.planner, env.horizon_cap()};
      json episodes = json::array();
      std::vector<double> returns;
      for (auto s : seeds) {
        current = s;
        step = 0;
        auto r = run_mpc_episode(runner, s, sink);
        returns.push_back(r.total_return);
        episodes.push_back({{"seed", s},
                            {"return", r.total_return},
                            {"normalized", normalized_score(env, r.total_return)},
                            {"steps", r.steps},
                            {"terminated", r.terminated}});
      }
      json out{{"config_hash", hash},
               {"config", to_json(cfg)},
               {"strategy", strategy},
               {"episodes", episodes},
               {"summary", to_json(summarize(env, returns, cfg.eval.bootstrap, cfg.eval.bootstrap_seed))}};
      write_text(dir / ("run-" + strategy + "-" + hash + ".json"), dump(out));
      if (trace) write_text(dir / ("trace-" + strategy + "-" + hash + ".jsonl"), lines.str());
    } else if (*cmp) {
      const auto t0 = std::chrono::steady_clock::now();
      auto report = compare_report(cfg, compare_strategies(cfg));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_text(dir / ("compare-" + hash + ".json"), dump(report));
      // wall-clock lives beside the report so the report itself stays reproducible
      write_text(dir / ("compare-" + hash + ".timings.json"), dump({{"config_hash", hash}, {"seconds", secs}}));
    } else if (*rep) {
      const fs::path in = compare_in.empty() ? dir / ("compare-" + hash + ".json") : fs::path(compare_in);
      std::ifstream is(in);
      if (!is) throw std::runtime_error("cannot open " + in.string() + " (run compare first)");
      const auto report = json::parse(is);
      const std::string h = report.at("config_hash").get<std::string>();
      write_text(dir / ("report-" + h + ".csv"), "# config " + h + '\n' + report_csv(report));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
