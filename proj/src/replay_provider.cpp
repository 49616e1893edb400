#include "tokenfuse/replay_provider.hpp"

#include <string>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

ReplayProvider::ReplayProvider(std::shared_ptr<const Trace> trace, int model_index,
                               std::string path_label, int provider_id)
    : trace_(std::move(trace)),
      model_index_(model_index),
      path_label_(std::move(path_label)),
      provider_id_(provider_id < 0 ? model_index : provider_id) {
  if (!trace_) {
    throw InvalidConfig("replay provider needs a trace");
  }
  if (model_index_ < 0 || model_index_ >= trace_->num_models) {
    throw InvalidConfig("trace has " + std::to_string(trace_->num_models) +
                        " models, replay asked for model " +
                        std::to_string(model_index_));
  }
}

ProviderDescriptor ReplayProvider::descriptor() const {
  ProviderDescriptor d;
  d.provider_id = provider_id_;
  d.kind = ProviderKind::replay;
  d.endpoint_or_path = path_label_.empty()
                           ? "replay:model" + std::to_string(model_index_)
                           : path_label_;
  d.vocabulary_fingerprint = trace_->vocab.fingerprint();
  return d;
}

LogitPair ReplayProvider::next_logits(const DecodingContext& context) {
  const LogitPair& recorded = trace_->record(context.step(), model_index_);
  if (context.perturbation.kind == PerturbationKind::none) {
    return LogitPair{recorded.original, recorded.original};
  }
  return recorded;
}

std::vector<std::unique_ptr<LogitProvider>> replay_session(
    std::shared_ptr<const Trace> trace, const std::string& path_label) {
  if (!trace) {
    throw InvalidConfig("replay session needs a trace");
  }
  std::vector<std::unique_ptr<LogitProvider>> providers;
  providers.reserve(static_cast<std::size_t>(trace->num_models));
  for (int m = 0; m < trace->num_models; ++m) {
    providers.push_back(std::make_unique<ReplayProvider>(trace, m, path_label));
  }
  return providers;
}

}  // namespace tokenfuse
