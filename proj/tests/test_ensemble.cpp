#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tokenfuse/ensemble.hpp"
#include "tokenfuse/errors.hpp"

using namespace tokenfuse;

namespace {

ProbVector pv(std::initializer_list<double> values) {
  return ProbVector{std::vector<double>(values)};
}

std::vector<ProbVector> random_ensemble(std::mt19937_64& rng, int n, int size) {
  std::vector<ProbVector> out;
  for (int m = 0; m < n; ++m) {
    out.push_back(ProbVector{oracle::random_distribution(rng, size)});
  }
  return out;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("rank_by_uncertainty sorts ascending with index ties") {
  CHECK(rank_by_uncertainty({0.5, 0.2, 0.9}) == std::vector<int>{1, 0, 2});
  CHECK(rank_by_uncertainty({0.3, 0.3}) == std::vector<int>{0, 1});
  CHECK(rank_by_uncertainty({1.7}) == std::vector<int>{0});
  CHECK_THROWS_AS(rank_by_uncertainty({}), EmptyInput);
}

TEST_CASE("lambda_candidates covers the grid endpoints") {
  CHECK(lambda_candidates(0.5) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(lambda_candidates(1.0) == std::vector<double>{0.0, 1.0});

  const std::vector<double> paper_grid = lambda_candidates(0.05);
  CHECK(paper_grid.size() == 21);
  CHECK(paper_grid.front() == 0.0);
  CHECK(paper_grid.back() == 1.0);
  CHECK(std::is_sorted(paper_grid.begin(), paper_grid.end()));

  CHECK_THROWS_AS(lambda_candidates(0.0), InvalidStep);
  CHECK_THROWS_AS(lambda_candidates(-0.1), InvalidStep);
  CHECK_THROWS_AS(lambda_candidates(1.5), InvalidStep);
}

TEST_CASE("grid search: one-hot current dominates any mixture") {
  GreedyConfig cfg;
  cfg.step_s = 0.5;
  const GridSearchResult r = grid_search_round(pv({1, 0}), pv({0.5, 0.5}), cfg);
  CHECK(r.lambda_star == 1.0);
  CHECK(r.fused_entropy == 0.0);
  CHECK(r.fused.probs == std::vector<double>{1.0, 0.0});
  CHECK(r.evaluations == 3);
}

TEST_CASE("grid search: identical inputs tie-break to lambda = 1") {
  GreedyConfig cfg;
  cfg.step_s = 0.25;
  const ProbVector p = pv({0.4, 0.35, 0.25});
  const GridSearchResult r = grid_search_round(p, p, cfg);
  CHECK(r.lambda_star == 1.0);

  GreedyConfig smallest = cfg;
  smallest.tie_break = TieBreak::smallest_lambda;
  CHECK(grid_search_round(p, p, smallest).lambda_star == 0.0);
}

TEST_CASE("grid search matches frozen exhaustive fixture") {
  GreedyConfig cfg;
  cfg.step_s = 0.25;
  const GridSearchResult r =
      grid_search_round(pv({0.7, 0.2, 0.1}), pv({0.1, 0.8, 0.1}), cfg);
  CHECK(r.lambda_star == 0.0);
  CHECK(r.fused_entropy == doctest::Approx(0.63903185965017695).epsilon(1e-14));
  CHECK(r.evaluations == 5);
  CHECK(r.fused.probs[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(r.fused.probs[1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(r.fused.probs[2] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("grid search rejects mismatched lengths") {
  GreedyConfig cfg;
  CHECK_THROWS_AS(grid_search_round(pv({1, 0}), pv({0.5, 0.25, 0.25}), cfg),
                  LengthMismatch);
}

TEST_CASE("grid search agrees with the oracle exactly on random pairs") {
  std::mt19937_64 rng(101);
  GreedyConfig cfg;
  for (double s : {0.05, 0.1, 0.25}) {
    cfg.step_s = s;
    for (int it = 0; it < 100; ++it) {
      const std::vector<double> a = oracle::random_distribution(rng, 32);
      const std::vector<double> b = oracle::random_distribution(rng, 32);
      const GridSearchResult got = grid_search_round(ProbVector{a}, ProbVector{b}, cfg);
      const oracle::PairwiseResult want = oracle::pairwise(a, b, cfg);
      CHECK(got.lambda_star == want.lambda_star);
      CHECK(got.fused_entropy == want.entropy);
      CHECK(got.evaluations == want.evaluations);
      REQUIRE(got.fused.probs.size() == want.fused.size());
      for (std::size_t i = 0; i < want.fused.size(); ++i) {
        CHECK(got.fused.probs[i] == want.fused[i]);
      }
    }
  }
}

TEST_CASE("ledger rescaling follows the recurrence") {
  WeightLedger ledger;
  ledger.weights = {1.0, 0.0, 0.0};
  ledger.apply_round(1, 0.8);
  ledger.apply_round(2, 0.9);
  CHECK(ledger.weights[0] == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(ledger.weights[1] == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(ledger.weights[2] == doctest::Approx(0.10).epsilon(1e-12));
  CHECK_NOTHROW(validate_weights(ledger.weights));
}

TEST_CASE("greedy with one model is a no-op") {
  const ProbVector p = pv({0.3, 0.3, 0.4});
  const GreedyResult r = greedy_optimize({p}, GreedyConfig{});
  CHECK(r.ledger.weights == std::vector<double>{1.0});
  CHECK(r.ledger.rounds.empty());
  CHECK(r.fused.probs == p.probs);
}

TEST_CASE("epsilon threshold stops before any round") {
  GreedyConfig cfg;
  cfg.epsilon = 0.1;
  const GreedyResult r = greedy_optimize({pv({1, 0}), pv({0.5, 0.5})}, cfg);
  CHECK(r.stop == RoundStop::epsilon);
  CHECK(r.ledger.rounds.empty());
  CHECK(r.ledger.weights == std::vector<double>{1.0, 0.0});
  CHECK(r.fused.probs == std::vector<double>{1.0, 0.0});
  CHECK(r.ledger.total_evaluations() == 0);
}

TEST_CASE("all-identical distributions keep full weight on the first") {
  const ProbVector p = pv({0.5, 0.3, 0.2});
  const GreedyResult r = greedy_optimize({p, p, p}, GreedyConfig{});
  CHECK(r.ledger.weights == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(r.fused.probs == p.probs);
  for (const RoundRecord& round : r.ledger.rounds) {
    CHECK(round.stop == RoundStop::skip);
    CHECK(round.lambda_star == 1.0);
  }
}

TEST_CASE("break_all skip policy ends optimization at the first skip") {
  GreedyConfig cfg;
  cfg.skip_policy = SkipPolicy::break_all;
  const ProbVector sharp = pv({0.97, 0.01, 0.02});
  const ProbVector flat1 = pv({0.4, 0.35, 0.25});
  const ProbVector flat2 = pv({0.3, 0.3, 0.4});
  const GreedyResult r = greedy_optimize({flat1, sharp, flat2}, cfg);
  // sharp is rank 1; both flats can only be skipped, so break_all stops
  // after one round.
  CHECK(r.ledger.rounds.size() == 1);
  CHECK(r.stop == RoundStop::skip);
  CHECK(r.ledger.weights == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("simplex invariant and monotone fused entropy on random ensembles") {
  std::mt19937_64 rng(202);
  GreedyConfig cfg;
  cfg.step_s = 0.1;
  for (int it = 0; it < 200; ++it) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const std::vector<ProbVector> models = random_ensemble(rng, n, 16);
    const GreedyResult r = greedy_optimize(models, cfg);

    double sum = 0.0;
    for (double w : r.ledger.weights) {
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);

    double min_single = entropy(models[0]);
    for (const ProbVector& m : models) {
      min_single = std::min(min_single, entropy(m));
    }
    CHECK(r.fused_entropy <= min_single + 1e-9);

    // each round is monotone
    double prev = min_single;
    for (const RoundRecord& round : r.ledger.rounds) {
      CHECK(round.fused_entropy <= prev + 1e-9);
      prev = round.fused_entropy;
    }
  }
}

TEST_CASE("greedy ledgers are bit-identical across repeated runs") {
  std::mt19937_64 rng(303);
  const std::vector<ProbVector> models = random_ensemble(rng, 4, 24);
  GreedyConfig cfg;
  cfg.step_s = 0.05;
  const GreedyResult a = greedy_optimize(models, cfg);
  const GreedyResult b = greedy_optimize(models, cfg);
  CHECK(a.ledger.weights == b.ledger.weights);
  CHECK(a.fused.probs == b.fused.probs);
  REQUIRE(a.ledger.rounds.size() == b.ledger.rounds.size());
  for (std::size_t i = 0; i < a.ledger.rounds.size(); ++i) {
    CHECK(a.ledger.rounds[i].lambda_star == b.ledger.rounds[i].lambda_star);
    CHECK(a.ledger.rounds[i].fused_entropy == b.ledger.rounds[i].fused_entropy);
  }
}

TEST_CASE("order invariance when entropies are distinct") {
  std::mt19937_64 rng(404);
  GreedyConfig cfg;
  cfg.step_s = 0.1;
  int tested = 0;
  while (tested < 50) {
    std::vector<ProbVector> models = random_ensemble(rng, 3, 12);
    std::vector<double> hs;
    for (const auto& m : models) {
      hs.push_back(entropy(m));
    }
    std::sort(hs.begin(), hs.end());
    if (hs[1] - hs[0] < 1e-6 || hs[2] - hs[1] < 1e-6) {
      continue;
    }
    ++tested;

    const GreedyResult base = greedy_optimize(models, cfg);
    std::vector<ProbVector> permuted = {models[2], models[0], models[1]};
    const GreedyResult perm = greedy_optimize(permuted, cfg);

    for (std::size_t i = 0; i < base.fused.probs.size(); ++i) {
      CHECK(std::abs(base.fused.probs[i] - perm.fused.probs[i]) < 1e-12);
    }
    // weights move with their models: permuted index p holds what base
    // assigned to the model now at p.
    CHECK(std::abs(perm.ledger.weights[0] - base.ledger.weights[2]) < 1e-12);
    CHECK(std::abs(perm.ledger.weights[1] - base.ledger.weights[0]) < 1e-12);
    CHECK(std::abs(perm.ledger.weights[2] - base.ledger.weights[1]) < 1e-12);
  }
}

TEST_CASE("fuse forms the convex combination") {
  const ProbVector one = pv({1, 0});
  const ProbVector two = pv({0, 1});
  const ProbVector mixed = fuse({one, two}, {0.6, 0.4}, Renormalize::none);
  CHECK(mixed.probs[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(mixed.probs[1] == doctest::Approx(0.4).epsilon(1e-12));

  const ProbVector degenerate = fuse({one, two}, {1.0, 0.0}, Renormalize::none);
  CHECK(degenerate.probs == one.probs);

  const ProbVector p = pv({0.2, 0.5, 0.3});
  const ProbVector fixed = fuse({p, p, p}, {0.2, 0.5, 0.3}, Renormalize::none);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(fixed.probs[i] == doctest::Approx(p.probs[i]).epsilon(1e-12));
  }
}

TEST_CASE("fuse validates weights and shapes") {
  const ProbVector p = pv({0.5, 0.5});
  CHECK_THROWS_AS(fuse({p, p}, {0.6, 0.6}, Renormalize::none), InvalidWeights);
  CHECK_THROWS_AS(fuse({p, p}, {1.5, -0.5}, Renormalize::none), InvalidWeights);
  CHECK_THROWS_AS(fuse({p}, {0.5, 0.5}, Renormalize::none), LengthMismatch);
  CHECK_THROWS_AS(fuse({}, {}, Renormalize::none), EmptyInput);
}

TEST_CASE("fuse with softmax renormalization still yields a distribution") {
  const ProbVector a = pv({0.9, 0.05, 0.05});
  const ProbVector b = pv({0.1, 0.6, 0.3});
  const ProbVector out = fuse({a, b}, {0.5, 0.5}, Renormalize::softmax);
  CHECK_NOTHROW(validate_probs(out));
}

TEST_CASE("evaluation counts follow (N-1) * grid size") {
  std::mt19937_64 rng(505);
  const std::vector<ProbVector> models = random_ensemble(rng, 3, 8);
  GreedyConfig coarse;
  coarse.step_s = 0.5;
  GreedyConfig fine;
  fine.step_s = 0.05;
  CHECK(greedy_optimize(models, coarse).ledger.total_evaluations() == 2 * 3);
  CHECK(greedy_optimize(models, fine).ledger.total_evaluations() == 2 * 21);
}

}  // TEST_SUITE
