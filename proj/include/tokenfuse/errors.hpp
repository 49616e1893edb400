#pragma once

#include <stdexcept>
#include <string>

namespace tokenfuse {

// Base for all engine errors. Every error carries a stable code string so the
// CLI and the wire protocol can surface the same identity the library throws.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define TOKENFUSE_DEFINE_ERROR(Name)                          \
  struct Name : Error {                                       \
    explicit Name(const std::string& message)                 \
        : Error(#Name, message) {}                            \
  }

// numerics
TOKENFUSE_DEFINE_ERROR(EmptyVector);
TOKENFUSE_DEFINE_ERROR(NonFiniteInput);
TOKENFUSE_DEFINE_ERROR(NegativeAlpha);
TOKENFUSE_DEFINE_ERROR(InvalidDistribution);
TOKENFUSE_DEFINE_ERROR(LengthMismatch);

// ensemble
TOKENFUSE_DEFINE_ERROR(EmptyInput);
TOKENFUSE_DEFINE_ERROR(InvalidStep);
TOKENFUSE_DEFINE_ERROR(InvalidWeights);

// providers
TOKENFUSE_DEFINE_ERROR(VocabularyMismatch);
TOKENFUSE_DEFINE_ERROR(ProviderUnavailable);
TOKENFUSE_DEFINE_ERROR(TraceExhausted);
TOKENFUSE_DEFINE_ERROR(RowLengthMismatch);

// decoder
TOKENFUSE_DEFINE_ERROR(InvalidStrategyParam);
TOKENFUSE_DEFINE_ERROR(SelectionError);

// wire protocol
TOKENFUSE_DEFINE_ERROR(ProtocolVersionMismatch);
TOKENFUSE_DEFINE_ERROR(OutOfOrderStep);
TOKENFUSE_DEFINE_ERROR(UnknownSession);
TOKENFUSE_DEFINE_ERROR(ProtocolError);

// harness
TOKENFUSE_DEFINE_ERROR(InvalidSpec);
TOKENFUSE_DEFINE_ERROR(InvalidConfig);

#undef TOKENFUSE_DEFINE_ERROR

}  // namespace tokenfuse
