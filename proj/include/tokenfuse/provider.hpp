#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tokenfuse/numerics.hpp"
#include "tokenfuse/vocabulary.hpp"

namespace tokenfuse {

enum class PerturbationKind { none, provider_native, trace_channel };

// How the perturbed channel of a logit pair is produced. noise_steps is
// passed through opaquely to providers that synthesize their own noise;
// it is 0 exactly when kind == none.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::none;
  int noise_steps = 0;

  void validate() const;
};

// Conditioning for one decoding step: the prompt, everything generated so
// far, and an opaque id naming the visual input.
struct DecodingContext {
  std::vector<int> prompt_tokens;
  std::vector<int> generated_tokens;
  std::string input_id;
  PerturbationSpec perturbation;

  int step() const { return static_cast<int>(generated_tokens.size()); }
};

enum class ProviderKind { scripted, replay, remote };

struct ProviderDescriptor {
  int provider_id = 0;
  ProviderKind kind = ProviderKind::scripted;
  std::string endpoint_or_path;
  uint64_t vocabulary_fingerprint = 0;
};

const char* provider_kind_name(ProviderKind kind);

// Any backend that yields original/perturbed logit pairs over the shared
// vocabulary. A single provider is not required to accept concurrent calls;
// distinct providers may be called concurrently within one step.
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  virtual ProviderDescriptor descriptor() const = 0;

  // Both channels for the step implied by the context. When the context's
  // perturbation kind is none, perturbed is a copy of original.
  virtual LogitPair next_logits(const DecodingContext& context) = 0;
};

// Checks that every provider shares one vocabulary fingerprint and returns
// the common vocabulary. Throws VocabularyMismatch naming the offending
// provider, or EmptyInput.
Vocabulary validate_session(const std::vector<LogitProvider*>& providers);

// Fingerprint-only form for descriptor lists (no vocabulary to return).
void validate_descriptors(const std::vector<ProviderDescriptor>& descriptors);

}  // namespace tokenfuse
