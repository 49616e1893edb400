#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "tokenfuse/config.hpp"
#include "tokenfuse/errors.hpp"

using namespace tokenfuse;

TEST_SUITE("config") {

TEST_CASE("full document parses into the session config") {
  const std::string doc = R"({
    "alpha": 0.5,
    "step": 0.1,
    "epsilon": 1.5,
    "renormalize": "softmax",
    "skip_policy": "break_all",
    "tie_break": "smallest_lambda",
    "strategy": "top_k",
    "top_k": 4,
    "max_new_tokens": 7,
    "stop_token_ids": [1, 2],
    "seed": 99,
    "perturbation": {"kind": "provider_native", "noise_steps": 500},
    "prompt_tokens": [0, 3],
    "input_id": "img-7",
    "vocab": ["a", "b", "c", "d"],
    "providers": [
      {"kind": "scripted", "table": [[1, 2, 3, 4]], "noise_seed": 5, "noise_scale": 0.25}
    ]
  })";
  const SessionConfig cfg = parse_session_config(doc);
  CHECK(cfg.ensemble.alpha == 0.5);
  CHECK(cfg.ensemble.greedy.step_s == 0.1);
  CHECK(cfg.ensemble.greedy.epsilon == 1.5);
  CHECK(cfg.ensemble.greedy.renormalize == Renormalize::softmax);
  CHECK(cfg.ensemble.greedy.skip_policy == SkipPolicy::break_all);
  CHECK(cfg.ensemble.greedy.tie_break == TieBreak::smallest_lambda);
  CHECK(cfg.ensemble.strategy.kind == StrategyKind::top_k);
  CHECK(cfg.ensemble.strategy.k == 4);
  CHECK(cfg.ensemble.max_new_tokens == 7);
  CHECK(cfg.ensemble.stop_token_ids.count(1) == 1);
  CHECK(cfg.ensemble.stop_token_ids.count(2) == 1);
  CHECK(cfg.ensemble.seed == 99);
  CHECK(cfg.perturbation.kind == PerturbationKind::provider_native);
  CHECK(cfg.perturbation.noise_steps == 500);
  CHECK(cfg.prompt_tokens == std::vector<int>{0, 3});
  CHECK(cfg.input_id == "img-7");
  REQUIRE(cfg.vocab.has_value());
  CHECK(cfg.vocab->tokens.size() == 4);
  REQUIRE(cfg.providers.size() == 1);
  CHECK(cfg.providers[0].kind == ProviderKind::scripted);
  CHECK(cfg.providers[0].noise_seed == 5);
  CHECK(cfg.providers[0].noise_scale == 0.25);
}

TEST_CASE("defaults follow the standard settings") {
  const SessionConfig cfg = parse_session_config("{}");
  CHECK(cfg.ensemble.alpha == 1.0);
  CHECK(cfg.ensemble.greedy.step_s == 0.05);
  CHECK(cfg.ensemble.greedy.epsilon == 0.0);
  CHECK(cfg.ensemble.greedy.renormalize == Renormalize::none);
  CHECK(cfg.ensemble.greedy.skip_policy == SkipPolicy::continue_next_model);
  CHECK(cfg.ensemble.greedy.tie_break == TieBreak::largest_lambda);
  CHECK(cfg.ensemble.strategy.kind == StrategyKind::greedy_argmax);
  CHECK(cfg.perturbation.kind == PerturbationKind::none);
}

TEST_CASE("bad documents are config errors") {
  CHECK_THROWS_AS(parse_session_config("not json"), InvalidConfig);
  CHECK_THROWS_AS(parse_session_config("[1,2,3]"), InvalidConfig);
  CHECK_THROWS_AS(parse_session_config(R"({"renormalize": "twice"})"), InvalidConfig);
  CHECK_THROWS_AS(parse_session_config(R"({"strategy": "beam"})"), InvalidConfig);
  CHECK_THROWS_AS(parse_session_config(R"({"providers": [{"kind": "psychic"}]})"),
                  InvalidConfig);
  CHECK_THROWS_AS(load_session_config("./no_such_file.json"), InvalidConfig);
}

TEST_CASE("scripted providers need a vocabulary") {
  const SessionConfig cfg = parse_session_config(
      R"({"providers": [{"kind": "scripted", "table": [[1, 2]]}]})");
  CHECK_THROWS_AS(build_providers(cfg, "s"), InvalidConfig);
}

TEST_CASE("build_providers instantiates scripted sessions") {
  const SessionConfig cfg = parse_session_config(R"({
    "vocab": ["x", "y"],
    "providers": [
      {"kind": "scripted", "table": [[1, 0]]},
      {"kind": "scripted", "table": [[0, 1]]}
    ]
  })");
  const auto providers = build_providers(cfg, "s");
  REQUIRE(providers.size() == 2);
  CHECK(providers[0]->descriptor().provider_id == 0);
  CHECK(providers[1]->descriptor().provider_id == 1);
  CHECK(providers[0]->descriptor().kind == ProviderKind::scripted);
}

TEST_CASE("noise presets carry the standard step counts") {
  CHECK(noise_steps_preset("mme") == 200);
  CHECK(noise_steps_preset("llava_bench") == 500);
  CHECK(noise_steps_preset("pope") == 999);
  CHECK_THROWS_AS(noise_steps_preset("imagenet"), InvalidConfig);
}

}  // TEST_SUITE
