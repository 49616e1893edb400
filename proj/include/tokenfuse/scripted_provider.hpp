#pragma once

#include <cstdint>
#include <vector>

#include "tokenfuse/provider.hpp"

namespace tokenfuse {

// In-process test double standing in for a real model: one fixed logit row
// per step. The perturbed channel adds Gaussian offsets drawn from a stream
// keyed by (seed, step), so it is a pure function of those regardless of
// call history.
class ScriptedProvider : public LogitProvider {
 public:
  ScriptedProvider(int provider_id, Vocabulary vocab,
                   std::vector<std::vector<double>> step_rows,
                   uint64_t noise_seed = 0, double noise_scale = 0.0,
                   bool scale_with_noise_steps = false);

  const Vocabulary& vocabulary() const override { return vocab_; }
  ProviderDescriptor descriptor() const override;
  LogitPair next_logits(const DecodingContext& context) override;

  int steps() const { return static_cast<int>(rows_.size()); }

 private:
  int provider_id_;
  Vocabulary vocab_;
  std::vector<std::vector<double>> rows_;
  uint64_t noise_seed_;
  double noise_scale_;
  // When set, the Gaussian sigma is noise_scale * noise_steps / 1000, so a
  // context's noise_steps acts as a linear intensity dial.
  bool scale_with_noise_steps_;
};

}  // namespace tokenfuse
