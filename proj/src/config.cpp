#include "tokenfuse/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/remote_provider.hpp"
#include "tokenfuse/replay_provider.hpp"
#include "tokenfuse/scripted_provider.hpp"
#include "tokenfuse/wire.hpp"

namespace tokenfuse {

using json = nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) {
    return fallback;
  }
  return it->get<T>();
}

}  // namespace

Renormalize renormalize_from_name(const std::string& name) {
  if (name == "none") return Renormalize::none;
  if (name == "softmax") return Renormalize::softmax;
  throw InvalidConfig("unknown renormalize mode: '" + name + "'");
}

SkipPolicy skip_policy_from_name(const std::string& name) {
  if (name == "continue_next_model") return SkipPolicy::continue_next_model;
  if (name == "break_all") return SkipPolicy::break_all;
  throw InvalidConfig("unknown skip policy: '" + name + "'");
}

TieBreak tie_break_from_name(const std::string& name) {
  if (name == "largest_lambda") return TieBreak::largest_lambda;
  if (name == "smallest_lambda") return TieBreak::smallest_lambda;
  throw InvalidConfig("unknown tie break: '" + name + "'");
}

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "greedy_argmax") return StrategyKind::greedy_argmax;
  if (name == "multinomial") return StrategyKind::multinomial;
  if (name == "top_k") return StrategyKind::top_k;
  if (name == "top_p") return StrategyKind::top_p;
  throw InvalidConfig("unknown strategy: '" + name + "'");
}

const char* renormalize_name(Renormalize v) {
  return v == Renormalize::none ? "none" : "softmax";
}

const char* skip_policy_name(SkipPolicy v) {
  return v == SkipPolicy::continue_next_model ? "continue_next_model" : "break_all";
}

const char* tie_break_name(TieBreak v) {
  return v == TieBreak::largest_lambda ? "largest_lambda" : "smallest_lambda";
}

const char* strategy_name(StrategyKind v) {
  switch (v) {
    case StrategyKind::greedy_argmax: return "greedy_argmax";
    case StrategyKind::multinomial: return "multinomial";
    case StrategyKind::top_k: return "top_k";
    case StrategyKind::top_p: return "top_p";
  }
  return "greedy_argmax";
}

int noise_steps_preset(const std::string& name) {
  static const std::unordered_map<std::string, int> presets = {
      {"mme", 200}, {"llava_bench", 500}, {"pope", 999}};
  auto it = presets.find(name);
  if (it == presets.end()) {
    throw InvalidConfig("unknown noise preset: '" + name +
                        "' (expected mme, llava_bench, or pope)");
  }
  return it->second;
}

SessionConfig parse_session_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad config JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw InvalidConfig("config must be a JSON object");
  }

  SessionConfig cfg;
  try {
    cfg.ensemble.alpha = get_or(j, "alpha", cfg.ensemble.alpha);
    cfg.ensemble.greedy.step_s = get_or(j, "step", cfg.ensemble.greedy.step_s);
    cfg.ensemble.greedy.epsilon = get_or(j, "epsilon", cfg.ensemble.greedy.epsilon);
    cfg.ensemble.greedy.renormalize = renormalize_from_name(
        get_or<std::string>(j, "renormalize", renormalize_name(cfg.ensemble.greedy.renormalize)));
    cfg.ensemble.greedy.skip_policy = skip_policy_from_name(
        get_or<std::string>(j, "skip_policy", skip_policy_name(cfg.ensemble.greedy.skip_policy)));
    cfg.ensemble.greedy.tie_break = tie_break_from_name(
        get_or<std::string>(j, "tie_break", tie_break_name(cfg.ensemble.greedy.tie_break)));
    cfg.ensemble.strategy.kind = strategy_from_name(
        get_or<std::string>(j, "strategy", strategy_name(cfg.ensemble.strategy.kind)));
    cfg.ensemble.strategy.k = get_or(j, "top_k", cfg.ensemble.strategy.k);
    cfg.ensemble.strategy.p = get_or(j, "top_p", cfg.ensemble.strategy.p);
    cfg.ensemble.max_new_tokens = get_or(j, "max_new_tokens", cfg.ensemble.max_new_tokens);
    cfg.ensemble.seed = get_or(j, "seed", cfg.ensemble.seed);
    if (j.contains("stop_token_ids")) {
      for (int t : j["stop_token_ids"].get<std::vector<int>>()) {
        cfg.ensemble.stop_token_ids.insert(t);
      }
    }

    if (j.contains("perturbation")) {
      const json& p = j["perturbation"];
      cfg.perturbation.kind =
          wire::perturbation_kind_from_name(get_or<std::string>(p, "kind", "none"));
      cfg.perturbation.noise_steps = get_or(p, "noise_steps", 0);
    }

    cfg.prompt_tokens = get_or(j, "prompt_tokens", cfg.prompt_tokens);
    cfg.input_id = get_or(j, "input_id", cfg.input_id);

    if (j.contains("vocab")) {
      Vocabulary v;
      v.tokens = j["vocab"].get<std::vector<std::string>>();
      v.validate();
      cfg.vocab = std::move(v);
    }

    for (const json& pj : get_or(j, "providers", json::array())) {
      ProviderConfig pc;
      const std::string kind = pj.at("kind").get<std::string>();
      if (kind == "scripted") {
        pc.kind = ProviderKind::scripted;
        pc.table = pj.at("table").get<std::vector<std::vector<double>>>();
        pc.noise_seed = get_or<uint64_t>(pj, "noise_seed", 0);
        pc.noise_scale = get_or(pj, "noise_scale", 0.0);
        pc.scale_with_noise_steps = get_or(pj, "scale_with_noise_steps", false);
      } else if (kind == "replay") {
        pc.kind = ProviderKind::replay;
        pc.path = pj.at("path").get<std::string>();
        pc.model = get_or(pj, "model", -1);
      } else if (kind == "remote") {
        pc.kind = ProviderKind::remote;
        pc.endpoint = pj.at("endpoint").get<std::string>();
      } else {
        throw InvalidConfig("unknown provider kind: '" + kind + "'");
      }
      cfg.providers.push_back(std::move(pc));
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad config field: ") + e.what());
  }
  return cfg;
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidConfig("cannot open config file: " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_session_config(buf.str());
}

std::vector<std::unique_ptr<LogitProvider>> build_providers(
    const SessionConfig& config, const std::string& session_id) {
  std::vector<std::unique_ptr<LogitProvider>> providers;
  int next_id = 0;
  for (const ProviderConfig& pc : config.providers) {
    switch (pc.kind) {
      case ProviderKind::scripted: {
        if (!config.vocab.has_value()) {
          throw InvalidConfig("scripted providers need a 'vocab' in the config");
        }
        providers.push_back(std::make_unique<ScriptedProvider>(
            next_id, *config.vocab, pc.table, pc.noise_seed, pc.noise_scale,
            pc.scale_with_noise_steps));
        ++next_id;
        break;
      }
      case ProviderKind::replay: {
        auto trace = std::make_shared<Trace>(read_trace(pc.path));
        if (pc.model >= 0) {
          providers.push_back(std::make_unique<ReplayProvider>(
              std::move(trace), pc.model, pc.path, next_id));
          ++next_id;
        } else {
          for (int m = 0; m < trace->num_models; ++m) {
            providers.push_back(
                std::make_unique<ReplayProvider>(trace, m, pc.path, next_id));
            ++next_id;
          }
        }
        break;
      }
      case ProviderKind::remote: {
        providers.push_back(std::make_unique<RemoteProvider>(
            next_id, pc.endpoint, session_id));
        ++next_id;
        break;
      }
    }
  }
  if (providers.empty()) {
    throw InvalidConfig("config declares no providers");
  }
  return providers;
}

}  // namespace tokenfuse
