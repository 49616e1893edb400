#include "tokenfuse/decoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/floatfmt.hpp"

namespace tokenfuse {

namespace {

const char* step_stop_name(StepStop stop) {
  switch (stop) {
    case StepStop::none: return "none";
    case StepStop::epsilon: return "epsilon";
    case StepStop::skip: return "skip";
  }
  return "none";
}

const char* round_stop_name(RoundStop stop) {
  switch (stop) {
    case RoundStop::none: return "none";
    case RoundStop::epsilon: return "epsilon";
    case RoundStop::skip: return "skip";
  }
  return "none";
}

StepStop to_step_stop(RoundStop stop) {
  switch (stop) {
    case RoundStop::epsilon: return StepStop::epsilon;
    case RoundStop::skip: return StepStop::skip;
    case RoundStop::none: break;
  }
  return StepStop::none;
}

std::vector<LogitPair> gather_pairs(const std::vector<LogitProvider*>& providers,
                                    const DecodingContext& context, FanOut fan_out) {
  std::vector<LogitPair> pairs(providers.size());
  if (fan_out == FanOut::sequential || providers.size() == 1) {
    for (std::size_t i = 0; i < providers.size(); ++i) {
      pairs[i] = providers[i]->next_logits(context);
    }
    return pairs;
  }

  // Gather-then-sort contract: each provider writes its own slot, errors are
  // rethrown in provider order, so scheduling never shows in the output.
  std::vector<std::exception_ptr> errors(providers.size());
  std::vector<std::thread> threads;
  threads.reserve(providers.size());
  for (std::size_t i = 0; i < providers.size(); ++i) {
    threads.emplace_back([&, i]() {
      try {
        pairs[i] = providers[i]->next_logits(context);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) {
    t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return pairs;
}

int sample_from_probs(const std::vector<double>& probs,
                      const std::vector<int>& indices, std::mt19937_64& rng) {
  // 53-bit uniform in [0,1); avoids std::uniform_real_distribution, whose
  // output is implementation-defined.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double total = 0.0;
  for (double p : probs) {
    total += p;
  }
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) {
      continue;
    }
    last_positive = indices[i];
    cum += probs[i];
    if (u < cum / total) {
      return indices[i];
    }
  }
  if (last_positive < 0) {
    throw SelectionError("no positive probability mass to sample from");
  }
  return last_positive;
}

}  // namespace

void Strategy::validate() const {
  switch (kind) {
    case StrategyKind::top_k:
      if (k < 1) {
        throw InvalidStrategyParam("top_k requires k >= 1, got " + std::to_string(k));
      }
      break;
    case StrategyKind::top_p:
      if (!(p > 0.0 && p <= 1.0)) {
        throw InvalidStrategyParam("top_p requires p in (0,1], got " + std::to_string(p));
      }
      break;
    case StrategyKind::greedy_argmax:
    case StrategyKind::multinomial:
      break;
  }
}

void EnsembleConfig::validate() const {
  if (!(alpha >= 0.0)) {
    throw NegativeAlpha("alpha must be >= 0");
  }
  if (!(greedy.step_s > 0.0 && greedy.step_s <= 1.0)) {
    throw InvalidStep("step must lie in (0,1]");
  }
  if (greedy.epsilon < 0.0) {
    throw InvalidConfig("epsilon must be >= 0");
  }
  if (max_new_tokens < 1) {
    throw InvalidConfig("max_new_tokens must be >= 1");
  }
  strategy.validate();
}

std::mt19937_64 step_rng(uint64_t seed, int step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xFFFFFFFFu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step)};
  return std::mt19937_64(seq);
}

int select_token(const ProbVector& fused, const Strategy& strategy,
                 std::mt19937_64& rng) {
  strategy.validate();
  validate_probs(fused);
  const std::size_t n = fused.size();
  if (n == 0) {
    throw EmptyVector("cannot select from empty distribution");
  }

  switch (strategy.kind) {
    case StrategyKind::greedy_argmax: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (fused.probs[i] > fused.probs[best]) {
          best = i;
        }
      }
      return static_cast<int>(best);
    }
    case StrategyKind::multinomial: {
      std::vector<int> indices(n);
      std::iota(indices.begin(), indices.end(), 0);
      return sample_from_probs(fused.probs, indices, rng);
    }
    case StrategyKind::top_k:
    case StrategyKind::top_p: {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      // Descending probability, ties by lower token index.
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return fused.probs[static_cast<std::size_t>(a)] >
               fused.probs[static_cast<std::size_t>(b)];
      });

      std::size_t keep = 0;
      if (strategy.kind == StrategyKind::top_k) {
        keep = std::min<std::size_t>(static_cast<std::size_t>(strategy.k), n);
      } else {
        double cum = 0.0;
        while (keep < n) {
          cum += fused.probs[static_cast<std::size_t>(order[keep])];
          ++keep;
          if (cum >= strategy.p) {
            break;
          }
        }
      }

      std::vector<double> kept_probs(keep);
      std::vector<int> kept_indices(keep);
      for (std::size_t i = 0; i < keep; ++i) {
        kept_indices[i] = order[i];
        kept_probs[i] = fused.probs[static_cast<std::size_t>(order[i])];
      }
      return sample_from_probs(kept_probs, kept_indices, rng);
    }
  }
  throw SelectionError("unknown strategy");
}

StepRecord decode_step(const std::vector<LogitProvider*>& providers,
                       const DecodingContext& context,
                       const EnsembleConfig& config, FanOut fan_out,
                       TraceWriter* trace_writer) {
  if (providers.empty()) {
    throw EmptyInput("no providers in session");
  }
  config.validate();

  const std::vector<LogitPair> pairs = gather_pairs(providers, context, fan_out);
  if (trace_writer != nullptr) {
    for (std::size_t m = 0; m < pairs.size(); ++m) {
      trace_writer->add(context.step(), static_cast<int>(m), pairs[m]);
    }
  }

  std::vector<ProbVector> per_model(pairs.size());
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    per_model[m] = contrastive_probs(pairs[m], config.alpha);
  }

  StepRecord record;
  record.step = context.step();
  record.per_model_entropy.resize(per_model.size());
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    record.per_model_entropy[m] = entropy(per_model[m]);
  }

  GreedyResult greedy = greedy_optimize(per_model, config.greedy);
  record.ledger = std::move(greedy.ledger);
  record.fused_entropy = greedy.fused_entropy;
  record.evaluations = record.ledger.total_evaluations();
  record.early_stop = to_step_stop(greedy.stop);

  std::mt19937_64 rng = step_rng(config.seed, context.step());
  record.selected_token = select_token(greedy.fused, config.strategy, rng);
  return record;
}

GenerationResult generate(const std::vector<LogitProvider*>& providers,
                          const std::vector<int>& prompt_tokens,
                          const EnsembleConfig& config, const Vocabulary& vocab,
                          const std::string& input_id,
                          const PerturbationSpec& perturbation, FanOut fan_out,
                          TraceWriter* trace_writer) {
  config.validate();
  perturbation.validate();
  for (int t : prompt_tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) {
      throw InvalidConfig("prompt token id out of vocabulary: " + std::to_string(t));
    }
  }

  const auto start = std::chrono::steady_clock::now();

  DecodingContext context;
  context.prompt_tokens = prompt_tokens;
  context.input_id = input_id;
  context.perturbation = perturbation;

  GenerationResult result;
  for (int step = 0; step < config.max_new_tokens; ++step) {
    StepRecord record = decode_step(providers, context, config, fan_out, trace_writer);
    const int token = record.selected_token;
    if (token < 0 || static_cast<std::size_t>(token) >= vocab.size()) {
      throw SelectionError("provider rows are inconsistent with the session vocabulary");
    }
    context.generated_tokens.push_back(token);
    result.tokens.push_back(token);
    result.totals.entropy_evaluations += record.evaluations;
    result.records.push_back(std::move(record));
    if (config.stop_token_ids.count(token) != 0) {
      break;
    }
  }

  result.totals.steps = static_cast<int>(result.records.size());
  for (int t : result.tokens) {
    result.text += vocab.tokens[static_cast<std::size_t>(t)];
  }
  const auto end = std::chrono::steady_clock::now();
  result.totals.wall_time_seconds =
      std::chrono::duration<double>(end - start).count();
  return result;
}

std::string step_record_to_json(const StepRecord& record) {
  std::string line = "{\"step\":" + std::to_string(record.step);
  line += ",\"per_model_entropy\":[";
  for (std::size_t i = 0; i < record.per_model_entropy.size(); ++i) {
    if (i != 0) {
      line += ',';
    }
    line += format_double17(record.per_model_entropy[i]);
  }
  line += "],\"weights\":[";
  for (std::size_t i = 0; i < record.ledger.weights.size(); ++i) {
    if (i != 0) {
      line += ',';
    }
    line += format_double17(record.ledger.weights[i]);
  }
  line += "],\"rounds\":[";
  for (std::size_t i = 0; i < record.ledger.rounds.size(); ++i) {
    const RoundRecord& r = record.ledger.rounds[i];
    if (i != 0) {
      line += ',';
    }
    line += "{\"candidate\":" + std::to_string(r.candidate);
    line += ",\"lambda\":" + format_double17(r.lambda_star);
    line += ",\"fused_entropy\":" + format_double17(r.fused_entropy);
    line += ",\"evaluations\":" + std::to_string(r.evaluations);
    line += ",\"stop\":\"" + std::string(round_stop_name(r.stop)) + "\"}";
  }
  line += "],\"fused_entropy\":" + format_double17(record.fused_entropy);
  line += ",\"evaluations\":" + std::to_string(record.evaluations);
  line += ",\"selected_token\":" + std::to_string(record.selected_token);
  line += ",\"early_stop\":\"" + std::string(step_stop_name(record.early_stop)) + "\"}";
  return line;
}

}  // namespace tokenfuse
