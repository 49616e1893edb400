#include "tokenfuse/scripted_provider.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

ScriptedProvider::ScriptedProvider(int provider_id, Vocabulary vocab,
                                   std::vector<std::vector<double>> step_rows,
                                   uint64_t noise_seed, double noise_scale,
                                   bool scale_with_noise_steps)
    : provider_id_(provider_id),
      vocab_(std::move(vocab)),
      rows_(std::move(step_rows)),
      noise_seed_(noise_seed),
      noise_scale_(noise_scale),
      scale_with_noise_steps_(scale_with_noise_steps) {
  vocab_.validate();
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != vocab_.size()) {
      throw RowLengthMismatch("row " + std::to_string(i) + " has " +
                              std::to_string(rows_[i].size()) + " scores, vocabulary has " +
                              std::to_string(vocab_.size()));
    }
  }
}

ProviderDescriptor ScriptedProvider::descriptor() const {
  ProviderDescriptor d;
  d.provider_id = provider_id_;
  d.kind = ProviderKind::scripted;
  d.endpoint_or_path = "scripted:" + std::to_string(provider_id_);
  d.vocabulary_fingerprint = vocab_.fingerprint();
  return d;
}

LogitPair ScriptedProvider::next_logits(const DecodingContext& context) {
  const int step = context.step();
  if (step < 0 || step >= steps()) {
    throw TraceExhausted("scripted table has " + std::to_string(steps()) +
                         " steps, step " + std::to_string(step) + " requested");
  }

  LogitPair pair;
  pair.original.scores = rows_[static_cast<std::size_t>(step)];
  pair.perturbed = pair.original;

  if (context.perturbation.kind == PerturbationKind::none || noise_scale_ == 0.0) {
    return pair;
  }

  double sigma = noise_scale_;
  if (scale_with_noise_steps_) {
    sigma *= context.perturbation.noise_steps / 1000.0;
  }

  // Fresh engine per (seed, step): reruns and out-of-order queries see the
  // same offsets. seed_seq works on 32-bit words, so the seed is split.
  std::seed_seq seq{static_cast<std::uint32_t>(noise_seed_ & 0xFFFFFFFFu),
                    static_cast<std::uint32_t>(noise_seed_ >> 32),
                    static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(provider_id_)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& x : pair.perturbed.scores) {
    x += sigma * gauss(rng);
  }
  return pair;
}

}  // namespace tokenfuse
