#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "tokenfuse/ensemble.hpp"
#include "tokenfuse/provider.hpp"
#include "tokenfuse/trace.hpp"

namespace tokenfuse {

enum class StrategyKind { greedy_argmax, multinomial, top_k, top_p };

struct Strategy {
  StrategyKind kind = StrategyKind::greedy_argmax;
  int k = 1;      // top_k only
  double p = 1.0; // top_p only

  void validate() const;  // throws InvalidStrategyParam
};

struct EnsembleConfig {
  double alpha = 1.0;
  GreedyConfig greedy;
  Strategy strategy;
  int max_new_tokens = 64;
  std::unordered_set<int> stop_token_ids;
  uint64_t seed = 0;

  void validate() const;
};

enum class StepStop { none, epsilon, skip };

// Full instrumentation for one decoding step.
struct StepRecord {
  int step = 0;
  std::vector<double> per_model_entropy;
  WeightLedger ledger;
  double fused_entropy = 0.0;
  int evaluations = 0;
  int selected_token = 0;
  StepStop early_stop = StepStop::none;
};

struct GenerationTotals {
  int steps = 0;
  long long entropy_evaluations = 0;
  double wall_time_seconds = 0.0;
};

struct GenerationResult {
  std::vector<int> tokens;
  std::string text;
  std::vector<StepRecord> records;
  GenerationTotals totals;
};

// Whether provider fan-out within a step runs on the calling thread or on
// one thread per provider. Results are gathered and re-ordered by provider
// index either way, so the choice never affects output.
enum class FanOut { sequential, parallel };

// Token choice from a fused distribution. greedy_argmax returns the lowest
// maximal index; sampling strategies draw from rng (a fresh engine keyed by
// (seed, step) - see step_rng).
int select_token(const ProbVector& fused, const Strategy& strategy,
                 std::mt19937_64& rng);

// Counter-based stream: a fresh engine per (seed, step) keeps sampling
// independent of how much work happened between steps.
std::mt19937_64 step_rng(uint64_t seed, int step);

// One decoding step: fan out to all providers, apply the contrastive
// transform, optimize weights, and select a token.
StepRecord decode_step(const std::vector<LogitProvider*>& providers,
                       const DecodingContext& context,
                       const EnsembleConfig& config,
                       FanOut fan_out = FanOut::sequential,
                       TraceWriter* trace_writer = nullptr);

// Autoregressive loop: appends each selected token to the context and stops
// at max_new_tokens or on any stop token (the stop token is kept in the
// output). The optional writers record the raw pair trace / StepRecord
// JSON Lines as generation advances.
GenerationResult generate(const std::vector<LogitProvider*>& providers,
                          const std::vector<int>& prompt_tokens,
                          const EnsembleConfig& config,
                          const Vocabulary& vocab,
                          const std::string& input_id = "",
                          const PerturbationSpec& perturbation = {},
                          FanOut fan_out = FanOut::sequential,
                          TraceWriter* trace_writer = nullptr);

// One JSON line mirroring the StepRecord fields; floats use the 17-digit
// convention so identical runs serialize byte-identically.
std::string step_record_to_json(const StepRecord& record);

}  // namespace tokenfuse
