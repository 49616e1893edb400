#pragma once

#include <string>

#include "tokenfuse/provider.hpp"

namespace tokenfuse {

// Client side of the framed-JSON logit protocol. Connects and handshakes on
// construction; one session per connection. A transport failure or timeout
// surfaces as ProviderUnavailable and fails the step.
class RemoteProvider : public LogitProvider {
 public:
  RemoteProvider(int provider_id, const std::string& endpoint,
                 const std::string& session_id, double timeout_seconds = 30.0);
  ~RemoteProvider() override;

  RemoteProvider(const RemoteProvider&) = delete;
  RemoteProvider& operator=(const RemoteProvider&) = delete;

  const Vocabulary& vocabulary() const override { return vocab_; }
  ProviderDescriptor descriptor() const override;
  LogitPair next_logits(const DecodingContext& context) override;

  const std::string& model_name() const { return model_name_; }

 private:
  int provider_id_;
  std::string endpoint_;
  std::string session_id_;
  int fd_ = -1;
  Vocabulary vocab_;
  std::string model_name_;
};

}  // namespace tokenfuse
