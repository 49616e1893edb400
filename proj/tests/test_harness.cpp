#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tokenfuse/benchmark.hpp"
#include "tokenfuse/decoder.hpp"
#include "tokenfuse/report.hpp"
#include "tokenfuse/scripted_provider.hpp"

using namespace tokenfuse;

namespace {

std::string strip_wall_time(std::string json) {
  const auto pos = json.find("\"wall_time_seconds\":");
  if (pos != std::string::npos) {
    json.erase(pos);
  }
  return json;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("greedy entropy sits between the global simplex minimum and the best single model") {
  std::mt19937_64 rng(2718);
  GreedyConfig cfg;
  cfg.step_s = 0.1;

  double max_gap = 0.0;
  for (int it = 0; it < 50; ++it) {
    std::vector<std::vector<double>> raw_models;
    std::vector<ProbVector> models;
    double best_single = 1e300;
    for (int m = 0; m < 3; ++m) {
      raw_models.push_back(oracle::random_distribution(rng, 8));
      models.push_back(ProbVector{raw_models.back()});
      best_single = std::min(best_single, entropy(models.back()));
    }

    const double global_min = oracle::simplex_global_min(raw_models, cfg.step_s);
    const GreedyResult greedy = greedy_optimize(models, cfg);

    const double gap = greedy.fused_entropy - global_min;
    CHECK(gap >= -1e-9);
    CHECK(gap <= (best_single - global_min) + 1e-9);
    CHECK(greedy.fused_entropy <= best_single + 1e-9);
    max_gap = std::max(max_gap, gap);
  }
  MESSAGE("greedy-vs-global max gap over 50 ensembles: ", max_gap);
}

TEST_CASE("epsilon at ln|O| stops every step after the rank-1 model") {
  Vocabulary vocab;
  for (int i = 0; i < 8; ++i) {
    vocab.tokens.push_back("w" + std::to_string(i));
  }
  std::mt19937_64 rng(59);
  std::vector<std::unique_ptr<LogitProvider>> owned;
  for (int m = 0; m < 3; ++m) {
    std::vector<std::vector<double>> rows;
    for (int t = 0; t < 6; ++t) {
      std::vector<double> row;
      for (int i = 0; i < 8; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        row.push_back((2.0 * u - 1.0) * 3.0);
      }
      rows.push_back(row);
    }
    owned.push_back(std::make_unique<ScriptedProvider>(m, vocab, rows));
  }
  std::vector<LogitProvider*> providers;
  for (const auto& p : owned) {
    providers.push_back(p.get());
  }

  EnsembleConfig cfg;
  cfg.max_new_tokens = 6;
  cfg.greedy.epsilon = std::log(8.0);  // at or above any achievable entropy
  const GenerationResult result = generate(providers, {}, cfg, vocab);

  CHECK(result.totals.entropy_evaluations == 0);
  for (const StepRecord& rec : result.records) {
    CHECK(rec.early_stop == StepStop::epsilon);
    CHECK(rec.ledger.rounds.empty());
    int nonzero = 0;
    for (double w : rec.ledger.weights) {
      if (w != 0.0) {
        ++nonzero;
        CHECK(w == 1.0);
      }
    }
    CHECK(nonzero == 1);
  }
}

TEST_CASE("run reports are identical across reruns except wall time") {
  BenchmarkSpec spec;
  spec.num_queries = 30;
  spec.num_models = 2;
  spec.seed = 77;
  spec.profiles = {{0.9, 0.95, 1.7}, {0.8, 0.9, 1.6}};
  const BenchmarkSuite suite = gen_benchmark(spec);

  auto run_once = [&suite]() {
    ReportBuilder builder("benchmark", true, 2);
    for (std::size_t q = 0; q < suite.queries.size(); ++q) {
      const auto owned = suite.session(static_cast<int>(q));
      std::vector<LogitProvider*> providers;
      for (const auto& p : owned) {
        providers.push_back(p.get());
      }
      EnsembleConfig cfg;
      cfg.max_new_tokens = 1;
      const GenerationResult r = generate(providers, {}, cfg, suite.vocab);
      builder.add(r);
      builder.add_accuracy_sample(
          r.tokens == suite.queries[q].reference_tokens,
          {suite.queries[q].correctness[0][0], suite.queries[q].correctness[1][0]});
    }
    return builder.finish(0.0);
  };

  const RunReport a = run_once();
  const RunReport b = run_once();
  CHECK(strip_wall_time(a.to_json()) == strip_wall_time(b.to_json()));
  REQUIRE(a.accuracy.has_value());
  CHECK(*a.accuracy >= 0.9);
  CHECK(a.to_table().find("ensemble accuracy") != std::string::npos);
  CHECK(a.to_json().find("\"synthetic\":true") != std::string::npos);
}

}  // TEST_SUITE
