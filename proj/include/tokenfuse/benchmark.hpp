#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tokenfuse/provider.hpp"
#include "tokenfuse/scripted_provider.hpp"

namespace tokenfuse {

enum class BenchmarkKind { pope_style_yesno, caption_style };

// How per-model error sets relate across models. disjoint gives each model
// its own slice of wrong queries (no query is missed by two models);
// independent draws per-model correctness independently.
enum class ErrorMode { independent, disjoint };

struct ModelProfile {
  double correct_rate = 1.0;           // fraction of queries answered right
  double confident_when_correct = 1.0; // 0..1, peak mass when right
  double entropy_when_wrong = 1.5;     // nats, target entropy when wrong
};

struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::pope_style_yesno;
  int num_queries = 100;
  int num_models = 2;
  std::vector<ModelProfile> profiles;  // one per model
  ErrorMode error_mode = ErrorMode::independent;
  int caption_length = 8;  // caption_style only
  uint64_t seed = 0;

  void validate() const;
};

// One generated query: per-model, per-step logit rows plus the reference
// answer. For yes/no queries the reference is a single token.
struct BenchmarkQuery {
  // rows[model][step] is a logit row over the benchmark vocabulary.
  std::vector<std::vector<std::vector<double>>> rows;
  std::vector<int> reference_tokens;
  // correctness[model][step]: whether that model was scripted to answer the
  // reference token at that step. Ground truth for oracles and reports.
  std::vector<std::vector<bool>> correctness;
};

struct BenchmarkSuite {
  BenchmarkSpec spec;
  Vocabulary vocab;
  std::vector<BenchmarkQuery> queries;

  // Scripted providers for one query (noise-free; perturbation kind none).
  std::vector<std::unique_ptr<LogitProvider>> session(int query) const;
};

// Deterministic under spec.seed. Rows are constructed so that a model's
// argmax is the reference token exactly when scripted correct, peak mass
// follows confident_when_correct, and wrong answers carry entropy close to
// entropy_when_wrong - confidence correlates with correctness by
// construction.
BenchmarkSuite gen_benchmark(const BenchmarkSpec& spec);

// The benchmark vocabulary: yes/no plus filler tokens.
Vocabulary benchmark_vocabulary();
inline constexpr int kYesToken = 0;
inline constexpr int kNoToken = 1;

// Builds a logit row over vocab_size tokens whose softmax puts peak_prob on
// answer_token and spreads the rest uniformly.
std::vector<double> peaked_row(int vocab_size, int answer_token, double peak_prob);

// Peak mass that hits a target entropy (nats) for a peaked_row; inverse of
// the row's entropy by bisection.
double peak_prob_for_entropy(int vocab_size, double target_entropy);

}  // namespace tokenfuse
