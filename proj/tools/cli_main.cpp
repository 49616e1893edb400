// Ensemble decoding harness: runs synthetic benchmarks, trace replays, and
// configured provider sessions, and emits run reports, step records, and
// pair traces.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tokenfuse/benchmark.hpp"
#include "tokenfuse/config.hpp"
#include "tokenfuse/decoder.hpp"
#include "tokenfuse/errors.hpp"
#include "tokenfuse/replay_provider.hpp"
#include "tokenfuse/report.hpp"
#include "tokenfuse/trace.hpp"

namespace {

using tokenfuse::EnsembleConfig;
using tokenfuse::FanOut;
using tokenfuse::GenerationResult;
using tokenfuse::LogitProvider;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;
constexpr int kExitAssert = 4;

struct CliOptions {
  std::string benchmark_path;
  std::string replay_path;
  std::string providers_path;

  std::optional<double> alpha;
  std::optional<double> step;
  std::optional<double> epsilon;
  std::optional<std::string> renormalize;
  std::optional<std::string> skip_policy;
  std::optional<std::string> tie_break;
  std::optional<std::string> strategy;
  std::optional<int> top_k;
  std::optional<double> top_p;
  std::optional<int> max_new_tokens;
  std::optional<uint64_t> seed;
  std::optional<std::string> noise_preset;
  std::optional<int> noise_steps;
  std::vector<int> prompt_tokens;
  std::vector<int> stop_tokens;
  std::optional<std::string> input_id;

  std::string record_trace_path;
  std::string record_steps_path;
  std::string report_path;
  bool assert_mode = false;
  bool parallel = false;
};

void apply_overrides(const CliOptions& opt, tokenfuse::SessionConfig& cfg) {
  if (opt.alpha) cfg.ensemble.alpha = *opt.alpha;
  if (opt.step) cfg.ensemble.greedy.step_s = *opt.step;
  if (opt.epsilon) cfg.ensemble.greedy.epsilon = *opt.epsilon;
  if (opt.renormalize)
    cfg.ensemble.greedy.renormalize = tokenfuse::renormalize_from_name(*opt.renormalize);
  if (opt.skip_policy)
    cfg.ensemble.greedy.skip_policy = tokenfuse::skip_policy_from_name(*opt.skip_policy);
  if (opt.tie_break)
    cfg.ensemble.greedy.tie_break = tokenfuse::tie_break_from_name(*opt.tie_break);
  if (opt.strategy)
    cfg.ensemble.strategy.kind = tokenfuse::strategy_from_name(*opt.strategy);
  if (opt.top_k) cfg.ensemble.strategy.k = *opt.top_k;
  if (opt.top_p) cfg.ensemble.strategy.p = *opt.top_p;
  if (opt.max_new_tokens) cfg.ensemble.max_new_tokens = *opt.max_new_tokens;
  if (opt.seed) cfg.ensemble.seed = *opt.seed;
  if (opt.noise_preset) {
    cfg.perturbation.kind = tokenfuse::PerturbationKind::provider_native;
    cfg.perturbation.noise_steps = tokenfuse::noise_steps_preset(*opt.noise_preset);
  }
  if (opt.noise_steps) {
    cfg.perturbation.noise_steps = *opt.noise_steps;
    if (*opt.noise_steps == 0) {
      cfg.perturbation.kind = tokenfuse::PerturbationKind::none;
    } else if (cfg.perturbation.kind == tokenfuse::PerturbationKind::none) {
      cfg.perturbation.kind = tokenfuse::PerturbationKind::provider_native;
    }
  }
  if (!opt.prompt_tokens.empty()) cfg.prompt_tokens = opt.prompt_tokens;
  if (!opt.stop_tokens.empty()) {
    cfg.ensemble.stop_token_ids.clear();
    cfg.ensemble.stop_token_ids.insert(opt.stop_tokens.begin(), opt.stop_tokens.end());
  }
  if (opt.input_id) cfg.input_id = *opt.input_id;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw tokenfuse::InvalidConfig("cannot open output file: " + path);
  }
  out << text;
}

void emit_report(const tokenfuse::RunReport& report, const std::string& report_path) {
  std::cout << report.to_table();
  if (!report_path.empty()) {
    write_text_file(report_path, report.to_json() + "\n");
  }
}

std::string records_to_jsonl(const std::vector<tokenfuse::StepRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += tokenfuse::step_record_to_json(rec);
    out += '\n';
  }
  return out;
}

tokenfuse::BenchmarkSpec parse_benchmark_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw tokenfuse::InvalidConfig("cannot open benchmark spec: " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw tokenfuse::InvalidConfig(std::string("bad benchmark JSON: ") + e.what());
  }

  tokenfuse::BenchmarkSpec spec;
  const std::string kind = j.value("kind", "pope_style_yesno");
  if (kind == "pope_style_yesno") {
    spec.kind = tokenfuse::BenchmarkKind::pope_style_yesno;
  } else if (kind == "caption_style") {
    spec.kind = tokenfuse::BenchmarkKind::caption_style;
  } else {
    throw tokenfuse::InvalidSpec("unknown benchmark kind: '" + kind + "'");
  }
  spec.num_queries = j.value("num_queries", spec.num_queries);
  spec.num_models = j.value("num_models", spec.num_models);
  spec.caption_length = j.value("caption_length", spec.caption_length);
  spec.seed = j.value("seed", spec.seed);
  const std::string mode = j.value("error_mode", "independent");
  if (mode == "independent") {
    spec.error_mode = tokenfuse::ErrorMode::independent;
  } else if (mode == "disjoint") {
    spec.error_mode = tokenfuse::ErrorMode::disjoint;
  } else {
    throw tokenfuse::InvalidSpec("unknown error_mode: '" + mode + "'");
  }
  if (j.contains("profiles")) {
    for (const auto& pj : j["profiles"]) {
      tokenfuse::ModelProfile p;
      p.correct_rate = pj.value("correct_rate", p.correct_rate);
      p.confident_when_correct = pj.value("confident_when_correct", p.confident_when_correct);
      p.entropy_when_wrong = pj.value("entropy_when_wrong", p.entropy_when_wrong);
      spec.profiles.push_back(p);
    }
  }
  // Default profile fan-out when only a count is given.
  while (static_cast<int>(spec.profiles.size()) < spec.num_models) {
    spec.profiles.push_back(tokenfuse::ModelProfile{});
  }
  return spec;
}

int run_benchmark(const CliOptions& opt) {
  if (!opt.record_trace_path.empty()) {
    throw tokenfuse::InvalidConfig("--record-trace is not supported with --benchmark");
  }
  const tokenfuse::BenchmarkSpec spec = parse_benchmark_spec(opt.benchmark_path);
  const tokenfuse::BenchmarkSuite suite = tokenfuse::gen_benchmark(spec);

  tokenfuse::SessionConfig cfg;
  cfg.ensemble.alpha = 1.0;
  cfg.ensemble.greedy.step_s = 0.05;
  apply_overrides(opt, cfg);
  cfg.perturbation = {};  // scripted rows are noise-free

  const FanOut fan_out = opt.parallel ? FanOut::parallel : FanOut::sequential;
  const auto start = std::chrono::steady_clock::now();

  tokenfuse::ReportBuilder builder("benchmark", /*synthetic=*/true, spec.num_models);
  std::string steps_jsonl;

  for (int q = 0; q < spec.num_queries; ++q) {
    const auto owned = suite.session(q);
    std::vector<LogitProvider*> providers;
    for (const auto& p : owned) {
      providers.push_back(p.get());
    }
    tokenfuse::validate_session(providers);

    EnsembleConfig qcfg = cfg.ensemble;
    const auto& reference = suite.queries[static_cast<std::size_t>(q)].reference_tokens;
    qcfg.max_new_tokens = static_cast<int>(reference.size());

    const GenerationResult result = tokenfuse::generate(
        providers, {}, qcfg, suite.vocab, "query-" + std::to_string(q), {}, fan_out);
    builder.add(result);
    if (!opt.record_steps_path.empty()) {
      steps_jsonl += records_to_jsonl(result.records);
    }

    for (std::size_t t = 0; t < reference.size(); ++t) {
      const bool ensemble_ok =
          t < result.tokens.size() && result.tokens[t] == reference[t];
      std::vector<bool> single_ok;
      for (int m = 0; m < spec.num_models; ++m) {
        single_ok.push_back(
            suite.queries[static_cast<std::size_t>(q)].correctness[static_cast<std::size_t>(m)][t]);
      }
      builder.add_accuracy_sample(ensemble_ok, single_ok);
    }
  }

  const auto end = std::chrono::steady_clock::now();
  const tokenfuse::RunReport report =
      builder.finish(std::chrono::duration<double>(end - start).count());
  emit_report(report, opt.report_path);
  if (!opt.record_steps_path.empty()) {
    write_text_file(opt.record_steps_path, steps_jsonl);
  }

  if (opt.assert_mode) {
    double best_single = 0.0;
    for (double a : report.single_model_accuracy) {
      best_single = std::max(best_single, a);
    }
    if (!report.accuracy.has_value() || *report.accuracy < best_single - 0.005) {
      std::cerr << "assertion failed: ensemble accuracy below best single model - 0.5%\n";
      return kExitAssert;
    }
  }
  return kExitOk;
}

GenerationResult run_replay_once(const std::shared_ptr<const tokenfuse::Trace>& trace,
                                 const tokenfuse::SessionConfig& cfg, FanOut fan_out,
                                 tokenfuse::TraceWriter* writer) {
  auto owned = tokenfuse::replay_session(trace);
  std::vector<LogitProvider*> providers;
  for (const auto& p : owned) {
    providers.push_back(p.get());
  }
  tokenfuse::validate_session(providers);
  return tokenfuse::generate(providers, cfg.prompt_tokens, cfg.ensemble, trace->vocab,
                             cfg.input_id, cfg.perturbation, fan_out, writer);
}

int run_replay(const CliOptions& opt) {
  auto trace = std::make_shared<const tokenfuse::Trace>(tokenfuse::read_trace(opt.replay_path));

  tokenfuse::SessionConfig cfg;
  cfg.ensemble.alpha = trace->alpha;
  cfg.ensemble.max_new_tokens = std::max(1, trace->num_steps());
  cfg.perturbation.kind = tokenfuse::PerturbationKind::trace_channel;
  cfg.perturbation.noise_steps = 1;  // opaque for recorded channels
  apply_overrides(opt, cfg);

  const FanOut fan_out = opt.parallel ? FanOut::parallel : FanOut::sequential;
  const auto start = std::chrono::steady_clock::now();

  std::unique_ptr<tokenfuse::TraceWriter> writer;
  if (!opt.record_trace_path.empty()) {
    writer = std::make_unique<tokenfuse::TraceWriter>(
        opt.record_trace_path, trace->vocab, trace->num_models, cfg.ensemble.alpha);
  }

  const GenerationResult result = run_replay_once(trace, cfg, fan_out, writer.get());
  if (writer) {
    writer->flush();
  }

  tokenfuse::ReportBuilder builder("replay", /*synthetic=*/false, trace->num_models);
  builder.add(result);
  const auto end = std::chrono::steady_clock::now();
  const tokenfuse::RunReport report =
      builder.finish(std::chrono::duration<double>(end - start).count());
  emit_report(report, opt.report_path);
  std::cout << "tokens: " << result.tokens.size() << "  text: " << result.text << "\n";

  if (!opt.record_steps_path.empty()) {
    write_text_file(opt.record_steps_path, records_to_jsonl(result.records));
  }

  if (opt.assert_mode) {
    // Replay determinism: a second pass must serialize byte-identically.
    const GenerationResult again = run_replay_once(trace, cfg, fan_out, nullptr);
    if (records_to_jsonl(result.records) != records_to_jsonl(again.records)) {
      std::cerr << "assertion failed: replay is not deterministic\n";
      return kExitAssert;
    }
    std::cout << "replay determinism check passed\n";
  }
  return kExitOk;
}

int run_providers(const CliOptions& opt) {
  tokenfuse::SessionConfig cfg = tokenfuse::load_session_config(opt.providers_path);
  apply_overrides(opt, cfg);
  if (opt.assert_mode) {
    throw tokenfuse::InvalidConfig("--assert requires --benchmark or --replay");
  }

  const std::string session_id = "cli-session-" + std::to_string(cfg.ensemble.seed);
  auto owned = tokenfuse::build_providers(cfg, session_id);
  std::vector<LogitProvider*> providers;
  for (const auto& p : owned) {
    providers.push_back(p.get());
  }
  const tokenfuse::Vocabulary vocab = tokenfuse::validate_session(providers);

  const FanOut fan_out = opt.parallel ? FanOut::parallel : FanOut::sequential;
  std::unique_ptr<tokenfuse::TraceWriter> writer;
  if (!opt.record_trace_path.empty()) {
    writer = std::make_unique<tokenfuse::TraceWriter>(
        opt.record_trace_path, vocab, static_cast<int>(providers.size()),
        cfg.ensemble.alpha);
  }

  const auto start = std::chrono::steady_clock::now();
  const GenerationResult result =
      tokenfuse::generate(providers, cfg.prompt_tokens, cfg.ensemble, vocab,
                          cfg.input_id, cfg.perturbation, fan_out, writer.get());
  if (writer) {
    writer->flush();
  }

  tokenfuse::ReportBuilder builder("providers", /*synthetic=*/false,
                                   static_cast<int>(providers.size()));
  builder.add(result);
  const auto end = std::chrono::steady_clock::now();
  const tokenfuse::RunReport report =
      builder.finish(std::chrono::duration<double>(end - start).count());
  emit_report(report, opt.report_path);
  std::cout << "tokens: " << result.tokens.size() << "  text: " << result.text << "\n";

  if (!opt.record_steps_path.empty()) {
    write_text_file(opt.record_steps_path, records_to_jsonl(result.records));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-guided token-level ensemble decoding harness"};

  CliOptions opt;
  auto* bench = app.add_option("--benchmark", opt.benchmark_path,
                               "Run a synthetic benchmark from a spec JSON file");
  auto* replay = app.add_option("--replay", opt.replay_path,
                                "Replay a recorded trace (JSONL)");
  auto* prov = app.add_option("--providers", opt.providers_path,
                              "Run a session from a config JSON document");
  bench->excludes(replay)->excludes(prov);
  replay->excludes(prov);

  app.add_option("--alpha", opt.alpha, "Contrastive intensity (>= 0)");
  app.add_option("--step", opt.step, "Grid step s in (0,1]");
  app.add_option("--epsilon", opt.epsilon, "Early-stop entropy threshold (nats)");
  app.add_option("--renormalize", opt.renormalize, "none | softmax");
  app.add_option("--skip-policy", opt.skip_policy, "continue_next_model | break_all");
  app.add_option("--tie-break", opt.tie_break, "largest_lambda | smallest_lambda");
  app.add_option("--strategy", opt.strategy,
                 "greedy_argmax | multinomial | top_k | top_p");
  app.add_option("--top-k", opt.top_k, "k for top_k");
  app.add_option("--top-p", opt.top_p, "p for top_p");
  app.add_option("--max-new-tokens", opt.max_new_tokens, "Generation cap");
  app.add_option("--seed", opt.seed, "Root seed");
  app.add_option("--noise-preset", opt.noise_preset,
                 "Perturbation preset: mme (200), llava_bench (500), pope (999)");
  app.add_option("--noise-steps", opt.noise_steps,
                 "Perturbation noise steps (0 disables perturbation)");
  app.add_option("--prompt", opt.prompt_tokens, "Prompt token ids")->delimiter(',');
  app.add_option("--stop-tokens", opt.stop_tokens, "Stop token ids")->delimiter(',');
  app.add_option("--input-id", opt.input_id, "Opaque visual-input id");
  app.add_option("--record-trace", opt.record_trace_path,
                 "Write the gathered logit pairs as a trace file");
  app.add_option("--record-steps", opt.record_steps_path,
                 "Write per-step records as JSON Lines");
  app.add_option("--report", opt.report_path, "Write the run report JSON here");
  app.add_flag("--assert", opt.assert_mode,
               "Fail (exit 4) when the run's acceptance check does not hold");
  app.add_flag("--parallel", opt.parallel, "Fan out to providers on threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!opt.benchmark_path.empty()) {
      return run_benchmark(opt);
    }
    if (!opt.replay_path.empty()) {
      return run_replay(opt);
    }
    if (!opt.providers_path.empty()) {
      return run_providers(opt);
    }
    std::cerr << "nothing to do: pass --benchmark, --replay, or --providers\n";
    return kExitConfig;
  } catch (const tokenfuse::InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tokenfuse::InvalidSpec& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tokenfuse::InvalidStep& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tokenfuse::InvalidStrategyParam& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tokenfuse::NegativeAlpha& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tokenfuse::RowLengthMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tokenfuse::Error& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProvider;
  }
}
