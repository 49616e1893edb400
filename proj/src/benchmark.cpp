#include "tokenfuse/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/numerics.hpp"

namespace tokenfuse {

namespace {

double rate_in_unit(double r, const char* what) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw InvalidSpec(std::string(what) + " must lie in [0,1]");
  }
  return r;
}

double row_entropy(const std::vector<double>& row) {
  LogitVector v;
  v.scores = row;
  return entropy(softmax(v));
}

// correctness[model][query] for yes/no suites (step dimension folded in by
// the caller for captions).
std::vector<std::vector<bool>> assign_correctness(const BenchmarkSpec& spec,
                                                  int slots, std::mt19937_64& rng) {
  const int n = spec.num_models;
  std::vector<std::vector<bool>> correct(static_cast<std::size_t>(n),
                                         std::vector<bool>(static_cast<std::size_t>(slots), true));

  if (spec.error_mode == ErrorMode::independent) {
    for (int m = 0; m < n; ++m) {
      const double rate = spec.profiles[static_cast<std::size_t>(m)].correct_rate;
      for (int q = 0; q < slots; ++q) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        correct[static_cast<std::size_t>(m)][static_cast<std::size_t>(q)] = u < rate;
      }
    }
    return correct;
  }

  // Disjoint: exact error counts carved out of one shuffled slot list, so a
  // slot is missed by at most one model and measured single-model accuracy
  // equals the configured rate up to rounding.
  std::vector<int> order(static_cast<std::size_t>(slots));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t cursor = 0;
  for (int m = 0; m < n; ++m) {
    const double rate = spec.profiles[static_cast<std::size_t>(m)].correct_rate;
    const auto errors =
        static_cast<std::size_t>(std::llround((1.0 - rate) * slots));
    if (cursor + errors > order.size()) {
      throw InvalidSpec("disjoint error sets need (1-rate) sums <= 1");
    }
    for (std::size_t i = 0; i < errors; ++i) {
      correct[static_cast<std::size_t>(m)][static_cast<std::size_t>(order[cursor + i])] = false;
    }
    cursor += errors;
  }
  return correct;
}

}  // namespace

void BenchmarkSpec::validate() const {
  if (num_queries < 1) {
    throw InvalidSpec("num_queries must be >= 1");
  }
  if (num_models < 1) {
    throw InvalidSpec("num_models must be >= 1");
  }
  if (profiles.size() != static_cast<std::size_t>(num_models)) {
    throw InvalidSpec("need one profile per model");
  }
  if (kind == BenchmarkKind::caption_style && caption_length < 1) {
    throw InvalidSpec("caption_length must be >= 1");
  }
  for (const ModelProfile& p : profiles) {
    rate_in_unit(p.correct_rate, "correct_rate");
    rate_in_unit(p.confident_when_correct, "confident_when_correct");
    if (p.entropy_when_wrong < 0.0) {
      throw InvalidSpec("entropy_when_wrong must be >= 0");
    }
  }
}

Vocabulary benchmark_vocabulary() {
  Vocabulary v;
  v.tokens = {"yes", "no", "maybe", "cat", "dog", "tree", "sky", "lamp"};
  return v;
}

std::vector<double> peaked_row(int vocab_size, int answer_token, double peak_prob) {
  if (vocab_size < 2 || answer_token < 0 || answer_token >= vocab_size) {
    throw InvalidSpec("bad peaked_row arguments");
  }
  const double peak = std::clamp(peak_prob, 1.0 / vocab_size + 1e-6, 1.0 - 1e-9);
  const double rest = (1.0 - peak) / (vocab_size - 1);
  std::vector<double> row(static_cast<std::size_t>(vocab_size), std::log(rest));
  row[static_cast<std::size_t>(answer_token)] = std::log(peak);
  return row;
}

double peak_prob_for_entropy(int vocab_size, double target_entropy) {
  const double max_h = std::log(static_cast<double>(vocab_size));
  const double target = std::clamp(target_entropy, 1e-3, max_h - 1e-6);
  double lo = 1.0 / vocab_size;  // uniform: entropy = ln V
  double hi = 1.0 - 1e-9;        // one-hot: entropy -> 0
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (row_entropy(peaked_row(vocab_size, 0, mid)) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

BenchmarkSuite gen_benchmark(const BenchmarkSpec& spec) {
  spec.validate();

  BenchmarkSuite suite;
  suite.spec = spec;
  suite.vocab = benchmark_vocabulary();
  const int vocab_size = static_cast<int>(suite.vocab.size());
  const int steps =
      spec.kind == BenchmarkKind::pope_style_yesno ? 1 : spec.caption_length;

  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed & 0xFFFFFFFFu),
                    static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(0x42656e63u)};
  std::mt19937_64 rng(seq);

  // Per-model peak masses; wrong answers aim at the configured entropy.
  std::vector<double> correct_peak(static_cast<std::size_t>(spec.num_models));
  std::vector<double> wrong_peak(static_cast<std::size_t>(spec.num_models));
  for (int m = 0; m < spec.num_models; ++m) {
    const ModelProfile& p = spec.profiles[static_cast<std::size_t>(m)];
    correct_peak[static_cast<std::size_t>(m)] =
        0.5 + 0.5 * p.confident_when_correct * (1.0 - 2e-9);
    wrong_peak[static_cast<std::size_t>(m)] =
        peak_prob_for_entropy(vocab_size, p.entropy_when_wrong);
  }

  const int slots = spec.num_queries * steps;
  const std::vector<std::vector<bool>> correct = assign_correctness(spec, slots, rng);

  suite.queries.resize(static_cast<std::size_t>(spec.num_queries));
  for (int q = 0; q < spec.num_queries; ++q) {
    BenchmarkQuery& query = suite.queries[static_cast<std::size_t>(q)];
    query.rows.assign(static_cast<std::size_t>(spec.num_models), {});
    query.correctness.assign(static_cast<std::size_t>(spec.num_models), {});

    for (int t = 0; t < steps; ++t) {
      int reference;
      if (spec.kind == BenchmarkKind::pope_style_yesno) {
        reference = (rng() & 1u) != 0 ? kYesToken : kNoToken;
      } else {
        reference = 2 + static_cast<int>(rng() % static_cast<uint64_t>(vocab_size - 2));
      }
      query.reference_tokens.push_back(reference);

      for (int m = 0; m < spec.num_models; ++m) {
        const int slot = q * steps + t;
        const bool is_correct =
            correct[static_cast<std::size_t>(m)][static_cast<std::size_t>(slot)];
        int answer = reference;
        if (!is_correct) {
          if (spec.kind == BenchmarkKind::pope_style_yesno) {
            answer = reference == kYesToken ? kNoToken : kYesToken;
          } else {
            // Any other filler token.
            answer = 2 + static_cast<int>(rng() % static_cast<uint64_t>(vocab_size - 2));
            if (answer == reference) {
              answer = answer == vocab_size - 1 ? 2 : answer + 1;
            }
          }
        }
        const double peak = is_correct ? correct_peak[static_cast<std::size_t>(m)]
                                       : wrong_peak[static_cast<std::size_t>(m)];
        query.rows[static_cast<std::size_t>(m)].push_back(
            peaked_row(vocab_size, answer, peak));
        query.correctness[static_cast<std::size_t>(m)].push_back(is_correct);
      }
    }
  }
  return suite;
}

std::vector<std::unique_ptr<LogitProvider>> BenchmarkSuite::session(int query) const {
  if (query < 0 || query >= static_cast<int>(queries.size())) {
    throw InvalidSpec("query index out of range");
  }
  const BenchmarkQuery& q = queries[static_cast<std::size_t>(query)];
  std::vector<std::unique_ptr<LogitProvider>> providers;
  providers.reserve(q.rows.size());
  for (std::size_t m = 0; m < q.rows.size(); ++m) {
    providers.push_back(std::make_unique<ScriptedProvider>(
        static_cast<int>(m), vocab, q.rows[m]));
  }
  return providers;
}

}  // namespace tokenfuse
