#include "tokenfuse/provider.hpp"

#include <string>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

void PerturbationSpec::validate() const {
  if (noise_steps < 0) {
    throw InvalidConfig("noise_steps must be >= 0");
  }
  if ((noise_steps == 0) != (kind == PerturbationKind::none)) {
    throw InvalidConfig("noise_steps must be 0 exactly when perturbation kind is none");
  }
}

const char* provider_kind_name(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::scripted: return "scripted";
    case ProviderKind::replay: return "replay";
    case ProviderKind::remote: return "remote";
  }
  return "unknown";
}

Vocabulary validate_session(const std::vector<LogitProvider*>& providers) {
  if (providers.empty()) {
    throw EmptyInput("session has no providers");
  }
  const Vocabulary& shared = providers.front()->vocabulary();
  const uint64_t expected = shared.fingerprint();
  for (const LogitProvider* p : providers) {
    const ProviderDescriptor d = p->descriptor();
    if (d.vocabulary_fingerprint != expected) {
      throw VocabularyMismatch(
          "provider " + std::to_string(d.provider_id) + " (" +
          provider_kind_name(d.kind) + " '" + d.endpoint_or_path +
          "') has fingerprint " + fingerprint_to_hex(d.vocabulary_fingerprint) +
          ", session expects " + fingerprint_to_hex(expected));
    }
  }
  return shared;
}

void validate_descriptors(const std::vector<ProviderDescriptor>& descriptors) {
  if (descriptors.empty()) {
    throw EmptyInput("no provider descriptors");
  }
  const uint64_t expected = descriptors.front().vocabulary_fingerprint;
  for (const ProviderDescriptor& d : descriptors) {
    if (d.vocabulary_fingerprint != expected) {
      throw VocabularyMismatch(
          "provider " + std::to_string(d.provider_id) + " (" +
          provider_kind_name(d.kind) + " '" + d.endpoint_or_path +
          "') has fingerprint " + fingerprint_to_hex(d.vocabulary_fingerprint) +
          ", session expects " + fingerprint_to_hex(expected));
    }
  }
}

}  // namespace tokenfuse
