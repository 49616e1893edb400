#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tokenfuse/benchmark.hpp"
#include "tokenfuse/decoder.hpp"
#include "tokenfuse/errors.hpp"
#include "tokenfuse/numerics.hpp"

using namespace tokenfuse;

namespace {

// Decode query q with the given model subset; returns the selected tokens.
std::vector<int> decode_query(const BenchmarkSuite& suite, int q,
                              const std::vector<int>& model_subset) {
  const BenchmarkQuery& query = suite.queries[static_cast<std::size_t>(q)];
  std::vector<std::unique_ptr<LogitProvider>> owned;
  for (int m : model_subset) {
    owned.push_back(std::make_unique<ScriptedProvider>(
        m, suite.vocab, query.rows[static_cast<std::size_t>(m)]));
  }
  std::vector<LogitProvider*> providers;
  for (const auto& p : owned) {
    providers.push_back(p.get());
  }
  EnsembleConfig cfg;
  cfg.max_new_tokens = static_cast<int>(query.reference_tokens.size());
  return generate(providers, {}, cfg, suite.vocab).tokens;
}

BenchmarkSpec two_model_spec(ErrorMode mode, double rate_a, double rate_b,
                             uint64_t seed, int queries) {
  BenchmarkSpec spec;
  spec.kind = BenchmarkKind::pope_style_yesno;
  spec.num_queries = queries;
  spec.num_models = 2;
  spec.error_mode = mode;
  spec.seed = seed;
  spec.profiles = {
      {rate_a, 0.95, 1.8},
      {rate_b, 0.9, 1.7},
  };
  return spec;
}

}  // namespace

TEST_SUITE("benchmark") {

TEST_CASE("generation is deterministic under the seed") {
  const BenchmarkSpec spec = two_model_spec(ErrorMode::independent, 0.8, 0.7, 5, 40);
  const BenchmarkSuite a = gen_benchmark(spec);
  const BenchmarkSuite b = gen_benchmark(spec);
  REQUIRE(a.queries.size() == b.queries.size());
  for (std::size_t q = 0; q < a.queries.size(); ++q) {
    CHECK(a.queries[q].reference_tokens == b.queries[q].reference_tokens);
    CHECK(a.queries[q].rows == b.queries[q].rows);
  }
  const BenchmarkSuite c = gen_benchmark(two_model_spec(ErrorMode::independent, 0.8, 0.7, 6, 40));
  bool any_difference = false;
  for (std::size_t q = 0; q < a.queries.size(); ++q) {
    any_difference = any_difference || a.queries[q].rows != c.queries[q].rows;
  }
  CHECK(any_difference);
}

TEST_CASE("perfect profile gives single-model accuracy 1.0") {
  BenchmarkSpec spec;
  spec.num_queries = 60;
  spec.num_models = 1;
  spec.profiles = {{1.0, 1.0, 1.5}};
  spec.seed = 3;
  const BenchmarkSuite suite = gen_benchmark(spec);

  int correct = 0;
  for (int q = 0; q < spec.num_queries; ++q) {
    const std::vector<int> tokens = decode_query(suite, q, {0});
    if (tokens == suite.queries[static_cast<std::size_t>(q)].reference_tokens) {
      ++correct;
    }
  }
  CHECK(correct == spec.num_queries);
}

TEST_CASE("wrong answers carry the configured entropy") {
  BenchmarkSpec spec;
  spec.num_queries = 50;
  spec.num_models = 1;
  spec.profiles = {{0.5, 0.9, 1.4}};
  spec.seed = 9;
  const BenchmarkSuite suite = gen_benchmark(spec);

  for (int q = 0; q < spec.num_queries; ++q) {
    const BenchmarkQuery& query = suite.queries[static_cast<std::size_t>(q)];
    LogitVector row;
    row.scores = query.rows[0][0];
    const double h = entropy(softmax(row));
    if (query.correctness[0][0]) {
      CHECK(h < 0.4);  // confident
    } else {
      CHECK(h == doctest::Approx(1.4).epsilon(1e-6));
    }
  }
}

TEST_CASE("scripted correctness agrees with single-model decoding") {
  const BenchmarkSpec spec = two_model_spec(ErrorMode::independent, 0.75, 0.6, 11, 50);
  const BenchmarkSuite suite = gen_benchmark(spec);
  for (int q = 0; q < spec.num_queries; ++q) {
    const BenchmarkQuery& query = suite.queries[static_cast<std::size_t>(q)];
    for (int m = 0; m < 2; ++m) {
      const std::vector<int> tokens = decode_query(suite, q, {m});
      const bool decoded_correct = tokens == query.reference_tokens;
      CHECK(decoded_correct == static_cast<bool>(query.correctness[static_cast<std::size_t>(m)][0]));
    }
  }
}

TEST_CASE("disjoint error sets give the ensemble perfect accuracy") {
  const BenchmarkSpec spec = two_model_spec(ErrorMode::disjoint, 0.85, 0.8, 13, 200);
  const BenchmarkSuite suite = gen_benchmark(spec);

  int ensemble_correct = 0;
  int single_a = 0;
  int single_b = 0;
  for (int q = 0; q < spec.num_queries; ++q) {
    const BenchmarkQuery& query = suite.queries[static_cast<std::size_t>(q)];
    if (decode_query(suite, q, {0, 1}) == query.reference_tokens) {
      ++ensemble_correct;
    }
    single_a += query.correctness[0][0] ? 1 : 0;
    single_b += query.correctness[1][0] ? 1 : 0;
  }
  CHECK(ensemble_correct == spec.num_queries);
  CHECK(std::abs(single_a / 200.0 - 0.85) <= 0.01);
  CHECK(std::abs(single_b / 200.0 - 0.8) <= 0.01);
}

TEST_CASE("disjoint mode rejects impossible error budgets") {
  CHECK_THROWS_AS(gen_benchmark(two_model_spec(ErrorMode::disjoint, 0.2, 0.2, 1, 50)),
                  InvalidSpec);
}

TEST_CASE("caption suites score token-level correctness") {
  BenchmarkSpec spec;
  spec.kind = BenchmarkKind::caption_style;
  spec.caption_length = 6;
  spec.num_queries = 10;
  spec.num_models = 2;
  spec.error_mode = ErrorMode::independent;
  spec.profiles = {{0.9, 0.95, 1.6}, {0.7, 0.9, 1.6}};
  spec.seed = 21;
  const BenchmarkSuite suite = gen_benchmark(spec);

  for (int q = 0; q < spec.num_queries; ++q) {
    const BenchmarkQuery& query = suite.queries[static_cast<std::size_t>(q)];
    REQUIRE(query.reference_tokens.size() == 6);
    const std::vector<int> tokens = decode_query(suite, q, {0, 1});
    REQUIRE(tokens.size() == 6);
    for (std::size_t t = 0; t < 6; ++t) {
      // when either model is scripted correct at t, the fused pick matches
      if (query.correctness[0][t] || query.correctness[1][t]) {
        CHECK(tokens[t] == query.reference_tokens[t]);
      }
    }
  }
}

TEST_CASE("oracle predictions match engine decoding") {
  const BenchmarkSpec spec = two_model_spec(ErrorMode::independent, 0.8, 0.79, 17, 100);
  const BenchmarkSuite suite = gen_benchmark(spec);
  const std::vector<int> predicted = oracle::benchmark_predictions(suite);
  for (int q = 0; q < spec.num_queries; ++q) {
    const std::vector<int> tokens = decode_query(suite, q, {0, 1});
    CHECK(tokens[0] == predicted[static_cast<std::size_t>(q)]);
  }
}

TEST_CASE("spec validation") {
  BenchmarkSpec spec;
  spec.num_queries = 0;
  CHECK_THROWS_AS(gen_benchmark(spec), InvalidSpec);
  spec.num_queries = 10;
  spec.num_models = 2;
  spec.profiles = {{1.0, 1.0, 1.5}};
  CHECK_THROWS_AS(gen_benchmark(spec), InvalidSpec);
  spec.profiles = {{1.5, 1.0, 1.5}, {1.0, 1.0, 1.5}};
  CHECK_THROWS_AS(gen_benchmark(spec), InvalidSpec);
}

}  // TEST_SUITE
