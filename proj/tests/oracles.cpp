#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

double naive_entropy(const std::vector<double>& probs) {
  double acc = 0.0;
  for (double p : probs) {
    if (p > 0.0) {
      acc += p * std::log(p);
    }
  }
  return -acc;
}

std::vector<double> naive_softmax(const std::vector<double>& scores) {
  double max = scores.front();
  for (double s : scores) {
    max = std::max(max, s);
  }
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - max);
    sum += out[i];
  }
  for (double& p : out) {
    p /= sum;
  }
  return out;
}

std::vector<double> naive_lambda_grid(double step_s) {
  std::vector<double> grid;
  int k = 0;
  while (true) {
    double v = k * step_s;
    if (v >= 1.0 - 1e-12) {
      break;
    }
    grid.push_back(v);
    ++k;
  }
  grid.push_back(1.0);
  return grid;
}

PairwiseResult pairwise(const std::vector<double>& current,
                        const std::vector<double>& candidate,
                        const tokenfuse::GreedyConfig& cfg) {
  if (current.size() != candidate.size()) {
    throw std::invalid_argument("oracle: length mismatch");
  }
  const std::vector<double> grid = naive_lambda_grid(cfg.step_s);

  std::vector<std::vector<double>> mixes;
  std::vector<double> entropies;
  for (double lam : grid) {
    std::vector<double> mix(current.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
      mix[i] = lam * current[i] + (1.0 - lam) * candidate[i];
    }
    if (cfg.renormalize == tokenfuse::Renormalize::softmax) {
      mix = naive_softmax(mix);
    }
    entropies.push_back(naive_entropy(mix));
    mixes.push_back(std::move(mix));
  }

  double min_h = entropies.front();
  for (double h : entropies) {
    min_h = std::min(min_h, h);
  }

  std::size_t pick = 0;
  if (cfg.tie_break == tokenfuse::TieBreak::largest_lambda) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (entropies[i] <= min_h + tokenfuse::kEntropyTieTolerance) {
        pick = i;  // keep the last (largest lambda) that qualifies
      }
    }
  } else {
    for (std::size_t i = grid.size(); i-- > 0;) {
      if (entropies[i] <= min_h + tokenfuse::kEntropyTieTolerance) {
        pick = i;
      }
    }
  }

  PairwiseResult r;
  r.lambda_star = grid[pick];
  r.entropy = entropies[pick];
  r.fused = mixes[pick];
  r.evaluations = static_cast<int>(grid.size());
  return r;
}

GreedyOracleResult greedy(const std::vector<std::vector<double>>& per_model,
                          const tokenfuse::GreedyConfig& cfg) {
  const std::size_t n = per_model.size();
  std::vector<double> entropies(n);
  for (std::size_t i = 0; i < n; ++i) {
    entropies[i] = naive_entropy(per_model[i]);
  }

  // argsort ascending, ties by index
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entropies[a] < entropies[b]; });

  GreedyOracleResult result;
  result.weights.assign(n, 0.0);
  result.weights[order[0]] = 1.0;
  result.fused = per_model[order[0]];
  result.entropy = entropies[order[0]];
  if (result.entropy < cfg.epsilon) {
    return result;
  }

  for (std::size_t r = 1; r < n; ++r) {
    const PairwiseResult round = pairwise(result.fused, per_model[order[r]], cfg);
    if (round.lambda_star == 1.0) {
      if (cfg.skip_policy == tokenfuse::SkipPolicy::break_all) {
        break;
      }
      continue;
    }
    for (double& w : result.weights) {
      w *= round.lambda_star;
    }
    result.weights[order[r]] += 1.0 - round.lambda_star;
    result.fused = round.fused;
    result.entropy = round.entropy;
    if (result.entropy < cfg.epsilon) {
      break;
    }
  }
  return result;
}

double simplex_global_min(const std::vector<std::vector<double>>& per_model,
                          double step_s) {
  if (per_model.size() != 3) {
    throw std::invalid_argument("oracle: simplex enumeration expects 3 models");
  }
  const std::vector<double> grid = naive_lambda_grid(step_s);
  const std::size_t dim = per_model.front().size();

  double best = std::log(static_cast<double>(dim)) + 1.0;
  for (double l0 : grid) {
    for (double l1 : grid) {
      const double l2 = 1.0 - l0 - l1;
      if (l2 < -1e-12) {
        continue;
      }
      const double l2c = std::max(l2, 0.0);
      std::vector<double> mix(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i) {
        mix[i] = l0 * per_model[0][i] + l1 * per_model[1][i] + l2c * per_model[2][i];
      }
      // renormalize against grid round-off so the entropy is well defined
      double sum = 0.0;
      for (double m : mix) {
        sum += m;
      }
      for (double& m : mix) {
        m /= sum;
      }
      best = std::min(best, naive_entropy(mix));
    }
  }
  return best;
}

std::vector<double> random_distribution(std::mt19937_64& rng, int size, double scale) {
  std::vector<double> logits(static_cast<std::size_t>(size));
  for (double& x : logits) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = (2.0 * u - 1.0) * scale;
  }
  return naive_softmax(logits);
}

std::vector<int> benchmark_predictions(const tokenfuse::BenchmarkSuite& suite) {
  std::vector<int> predictions;
  predictions.reserve(suite.queries.size());
  tokenfuse::GreedyConfig cfg;
  cfg.step_s = 0.05;

  for (const tokenfuse::BenchmarkQuery& query : suite.queries) {
    std::vector<std::vector<double>> per_model;
    for (const auto& rows : query.rows) {
      per_model.push_back(naive_softmax(rows.at(0)));
    }
    const GreedyOracleResult fused = greedy(per_model, cfg);
    int argmax = 0;
    for (std::size_t i = 1; i < fused.fused.size(); ++i) {
      if (fused.fused[i] > fused.fused[static_cast<std::size_t>(argmax)]) {
        argmax = static_cast<int>(i);
      }
    }
    predictions.push_back(argmax);
  }
  return predictions;
}

}  // namespace oracle
