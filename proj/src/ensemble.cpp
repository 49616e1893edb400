#include "tokenfuse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

namespace {

ProbVector mix_probs(const ProbVector& current, const ProbVector& candidate,
                     double lambda) {
  ProbVector mix;
  mix.probs.resize(current.size());
  for (std::size_t i = 0; i < mix.probs.size(); ++i) {
    mix.probs[i] = lambda * current.probs[i] + (1.0 - lambda) * candidate.probs[i];
  }
  return mix;
}

ProbVector apply_renormalize(ProbVector mix, Renormalize mode) {
  if (mode == Renormalize::softmax) {
    LogitVector as_logits;
    as_logits.scores = std::move(mix.probs);
    return softmax(as_logits);
  }
  return mix;
}

}  // namespace

void WeightLedger::apply_round(int candidate, double lambda_star) {
  for (double& w : weights) {
    w *= lambda_star;
  }
  weights.at(static_cast<std::size_t>(candidate)) += 1.0 - lambda_star;
}

int WeightLedger::total_evaluations() const {
  int total = 0;
  for (const RoundRecord& r : rounds) {
    total += r.evaluations;
  }
  return total;
}

void validate_weights(const std::vector<double>& weights) {
  if (weights.empty()) {
    throw InvalidWeights("empty weight vector");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-12 && w <= 1.0 + 1e-12)) {
      throw InvalidWeights("weight outside [0,1]: " + std::to_string(w));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw InvalidWeights("weights sum to " + std::to_string(sum));
  }
}

std::vector<int> rank_by_uncertainty(const std::vector<double>& entropies) {
  if (entropies.empty()) {
    throw EmptyInput("no entropies to rank");
  }
  for (double h : entropies) {
    if (!std::isfinite(h) || h < 0.0) {
      throw NonFiniteInput("entropy must be finite and >= 0");
    }
  }
  std::vector<int> order(entropies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return entropies[static_cast<std::size_t>(a)] <
           entropies[static_cast<std::size_t>(b)];
  });
  return order;
}

std::vector<double> lambda_candidates(double step_s) {
  if (!(step_s > 0.0 && step_s <= 1.0)) {
    throw InvalidStep("step must lie in (0,1], got " + std::to_string(step_s));
  }
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double v = k * step_s;
    if (v >= 1.0 - 1e-12) {
      break;
    }
    out.push_back(v);
  }
  out.push_back(1.0);
  return out;
}

GridSearchResult grid_search_round(const ProbVector& current,
                                   const ProbVector& candidate,
                                   const GreedyConfig& cfg) {
  if (current.size() != candidate.size()) {
    throw LengthMismatch("grid search over distributions of different length");
  }
  const std::vector<double> grid = lambda_candidates(cfg.step_s);

  std::vector<double> entropies(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ProbVector fused =
        apply_renormalize(mix_probs(current, candidate, grid[i]), cfg.renormalize);
    entropies[i] = entropy(fused);
  }

  const double min_entropy = *std::min_element(entropies.begin(), entropies.end());
  std::size_t best = 0;
  if (cfg.tie_break == TieBreak::largest_lambda) {
    for (std::size_t i = grid.size(); i-- > 0;) {
      if (entropies[i] <= min_entropy + kEntropyTieTolerance) {
        best = i;
        break;
      }
    }
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (entropies[i] <= min_entropy + kEntropyTieTolerance) {
        best = i;
        break;
      }
    }
  }

  GridSearchResult result;
  result.lambda_star = grid[best];
  result.fused =
      apply_renormalize(mix_probs(current, candidate, grid[best]), cfg.renormalize);
  result.fused_entropy = entropies[best];
  result.evaluations = static_cast<int>(grid.size());
  return result;
}

GreedyResult greedy_optimize(const std::vector<ProbVector>& per_model,
                             const GreedyConfig& cfg) {
  if (per_model.empty()) {
    throw EmptyInput("no distributions to ensemble");
  }
  const std::size_t vocab = per_model.front().size();
  for (const ProbVector& p : per_model) {
    if (p.size() != vocab) {
      throw LengthMismatch("per-model distributions differ in length");
    }
  }

  std::vector<double> entropies(per_model.size());
  for (std::size_t i = 0; i < per_model.size(); ++i) {
    entropies[i] = entropy(per_model[i]);
  }
  const std::vector<int> order = rank_by_uncertainty(entropies);

  GreedyResult result;
  result.ledger.weights.assign(per_model.size(), 0.0);
  result.ledger.weights[static_cast<std::size_t>(order[0])] = 1.0;
  result.fused = per_model[static_cast<std::size_t>(order[0])];
  result.fused_entropy = entropies[static_cast<std::size_t>(order[0])];

  if (result.fused_entropy < cfg.epsilon) {
    result.stop = RoundStop::epsilon;
    return result;
  }

  for (std::size_t r = 1; r < order.size(); ++r) {
    const int candidate = order[r];
    GridSearchResult round =
        grid_search_round(result.fused, per_model[static_cast<std::size_t>(candidate)], cfg);

    RoundRecord record;
    record.candidate = candidate;
    record.lambda_star = round.lambda_star;
    record.evaluations = round.evaluations;

    if (round.lambda_star == 1.0) {
      // Candidate adds nothing; the running fused state is left untouched
      // (under Renormalize::softmax the grid's lambda=1 output is a
      // re-softmaxed copy, which a skipped round must not install).
      record.fused_entropy = result.fused_entropy;
      record.stop = RoundStop::skip;
      result.ledger.rounds.push_back(record);
      if (cfg.skip_policy == SkipPolicy::break_all) {
        result.stop = RoundStop::skip;
        break;
      }
      continue;
    }

    result.ledger.apply_round(candidate, round.lambda_star);
    result.fused = std::move(round.fused);
    result.fused_entropy = round.fused_entropy;
    record.fused_entropy = round.fused_entropy;

    if (result.fused_entropy < cfg.epsilon) {
      record.stop = RoundStop::epsilon;
      result.ledger.rounds.push_back(record);
      result.stop = RoundStop::epsilon;
      break;
    }
    result.ledger.rounds.push_back(record);
  }

  validate_weights(result.ledger.weights);
  return result;
}

ProbVector fuse(const std::vector<ProbVector>& per_model,
                const std::vector<double>& weights,
                Renormalize renormalize) {
  if (per_model.empty()) {
    throw EmptyInput("no distributions to fuse");
  }
  if (per_model.size() != weights.size()) {
    throw LengthMismatch("weight count does not match model count");
  }
  validate_weights(weights);
  const std::size_t vocab = per_model.front().size();
  for (const ProbVector& p : per_model) {
    if (p.size() != vocab) {
      throw LengthMismatch("per-model distributions differ in length");
    }
  }

  ProbVector combo;
  combo.probs.assign(vocab, 0.0);
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    for (std::size_t i = 0; i < vocab; ++i) {
      combo.probs[i] += weights[m] * per_model[m].probs[i];
    }
  }
  return apply_renormalize(std::move(combo), renormalize);
}

}  // namespace tokenfuse
