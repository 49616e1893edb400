#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tokenfuse/decoder.hpp"
#include "tokenfuse/provider.hpp"

namespace tokenfuse {

// One provider entry of the session config document.
struct ProviderConfig {
  ProviderKind kind = ProviderKind::scripted;
  // scripted
  std::vector<std::vector<double>> table;
  uint64_t noise_seed = 0;
  double noise_scale = 0.0;
  bool scale_with_noise_steps = false;
  // replay
  std::string path;
  int model = -1;  // -1: expand to every model in the trace
  // remote
  std::string endpoint;
};

// The single JSON document the harness consumes: decoding configuration,
// perturbation, prompt, and provider descriptors. Every field has a default
// and every scalar is overridable by a CLI flag.
struct SessionConfig {
  EnsembleConfig ensemble;
  PerturbationSpec perturbation;
  std::vector<int> prompt_tokens;
  std::string input_id = "input-0";
  std::optional<Vocabulary> vocab;  // required by scripted providers
  std::vector<ProviderConfig> providers;
};

SessionConfig parse_session_config(const std::string& json_text);
SessionConfig load_session_config(const std::string& path);

// Instantiates the configured providers (provider_id = position).
std::vector<std::unique_ptr<LogitProvider>> build_providers(
    const SessionConfig& config, const std::string& session_id);

// Enum name parsing shared by the config document and CLI flags. All throw
// InvalidConfig on unknown names.
Renormalize renormalize_from_name(const std::string& name);
SkipPolicy skip_policy_from_name(const std::string& name);
TieBreak tie_break_from_name(const std::string& name);
StrategyKind strategy_from_name(const std::string& name);
const char* renormalize_name(Renormalize v);
const char* skip_policy_name(SkipPolicy v);
const char* tie_break_name(TieBreak v);
const char* strategy_name(StrategyKind v);

// Named noise presets: mme -> 200, llava_bench -> 500, pope -> 999.
int noise_steps_preset(const std::string& name);

}  // namespace tokenfuse
