#pragma once

#include <cstdint>
#include <vector>

#include "tokenfuse/numerics.hpp"

namespace tokenfuse {

enum class SkipPolicy { continue_next_model, break_all };
enum class TieBreak { largest_lambda, smallest_lambda };
enum class Renormalize { none, softmax };

// Knobs of the per-step weight optimization.
struct GreedyConfig {
  double step_s = 0.05;   // grid step over [0,1]
  double epsilon = 0.0;   // nats; fused entropy below this ends optimization
  SkipPolicy skip_policy = SkipPolicy::continue_next_model;
  TieBreak tie_break = TieBreak::largest_lambda;
  Renormalize renormalize = Renormalize::none;
};

// Entropy equality tolerance used when breaking grid-search ties.
inline constexpr double kEntropyTieTolerance = 1e-12;

enum class RoundStop { none, skip, epsilon };

// One greedy round: the candidate model visited, the mixing weight chosen,
// the fused entropy after the round, and how many lambda values were scored.
struct RoundRecord {
  int candidate = -1;
  double lambda_star = 1.0;
  double fused_entropy = 0.0;
  int evaluations = 0;
  RoundStop stop = RoundStop::none;
};

// Per-step simplex weights indexed by original provider index, plus the
// audit trail of the rounds that produced them. Providers never reached
// keep weight exactly 0.
struct WeightLedger {
  std::vector<double> weights;
  std::vector<RoundRecord> rounds;

  // Applies one round of the recurrence p <- lambda*p + (1-lambda)*p_next:
  // every weight assigned so far is scaled by lambda_star and the candidate
  // receives 1 - lambda_star. Keeps the simplex sum at 1.
  void apply_round(int candidate, double lambda_star);

  int total_evaluations() const;
};

// Throws InvalidWeights unless weights lie in [0,1] and sum to 1 within 1e-9.
void validate_weights(const std::vector<double>& weights);

// Indices sorted by ascending entropy; ties broken by ascending index.
std::vector<int> rank_by_uncertainty(const std::vector<double>& entropies);

// Ascending grid {0, s, 2s, ...} with 1 appended when not already last.
std::vector<double> lambda_candidates(double step_s);

struct GridSearchResult {
  double lambda_star = 1.0;
  ProbVector fused;
  double fused_entropy = 0.0;
  int evaluations = 0;
};

// Scores mix = lambda*current + (1-lambda)*candidate for every lambda on the
// grid (after cfg.renormalize) and returns the entropy-minimizing lambda.
// Ties within kEntropyTieTolerance resolve per cfg.tie_break.
GridSearchResult grid_search_round(const ProbVector& current,
                                   const ProbVector& candidate,
                                   const GreedyConfig& cfg);

struct GreedyResult {
  WeightLedger ledger;
  ProbVector fused;
  double fused_entropy = 0.0;
  RoundStop stop = RoundStop::none;  // epsilon / skip when ended early
};

// Visits models by ascending entropy, starting from the lowest-entropy one
// at weight 1, and folds each candidate in with grid_search_round. A round
// with lambda* = 1 contributes weight 0 (cfg.skip_policy decides whether
// later candidates are still visited); fused entropy below cfg.epsilon
// terminates immediately.
GreedyResult greedy_optimize(const std::vector<ProbVector>& per_model,
                             const GreedyConfig& cfg);

// Convex combination sum_i weights[i] * per_model[i] (Renormalize::softmax
// additionally passes the combination through softmax).
ProbVector fuse(const std::vector<ProbVector>& per_model,
                const std::vector<double>& weights,
                Renormalize renormalize);

}  // namespace tokenfuse
