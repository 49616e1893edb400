#pragma once

#include <memory>

#include "tokenfuse/provider.hpp"
#include "tokenfuse/trace.hpp"

namespace tokenfuse {

// Serves one model's recorded channels from a trace, bit-exact.
class ReplayProvider : public LogitProvider {
 public:
  // provider_id defaults to the trace model index.
  ReplayProvider(std::shared_ptr<const Trace> trace, int model_index,
                 std::string path_label = "", int provider_id = -1);

  const Vocabulary& vocabulary() const override { return trace_->vocab; }
  ProviderDescriptor descriptor() const override;
  LogitPair next_logits(const DecodingContext& context) override;

 private:
  std::shared_ptr<const Trace> trace_;
  int model_index_;
  std::string path_label_;
  int provider_id_;
};

// One replay provider per model in the trace.
std::vector<std::unique_ptr<LogitProvider>> replay_session(
    std::shared_ptr<const Trace> trace, const std::string& path_label = "");

}  // namespace tokenfuse
