#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tokenfuse/provider.hpp"

namespace tokenfuse::wire {

inline constexpr int kProtocolVersion = 1;
inline constexpr uint32_t kMaxFrameBytes = 64u * 1024u * 1024u;

enum class WantChannels { original_only, both };

struct HelloRequest {
  int protocol_version = kProtocolVersion;
  std::string session_id;
};

struct HelloResponse {
  std::string model_name;
  std::vector<std::string> vocab;
  std::string fingerprint;  // hex64 of the served vocabulary
};

struct LogitRequest {
  std::string session_id;
  int step = 0;
  std::vector<int> prompt_tokens;
  std::vector<int> generated_tokens;
  std::string input_id;
  PerturbationSpec perturbation;
  WantChannels want_channels = WantChannels::both;
};

struct LogitResponse {
  std::string session_id;
  int step = 0;
  std::vector<double> original;
  std::optional<std::vector<double>> perturbed;
  std::string vocab_fingerprint;
};

struct WireError {
  std::string code;
  std::string message;
};

using Message =
    std::variant<HelloRequest, HelloResponse, LogitRequest, LogitResponse, WireError>;

// Payload encoding. Floats travel as 17-significant-digit decimal strings
// so a 64-bit value survives the round trip bit-exactly.
std::string encode(const HelloRequest& m);
std::string encode(const HelloResponse& m);
std::string encode(const LogitRequest& m);
std::string encode(const LogitResponse& m);
std::string encode(const WireError& m);

// Parses any message by its "type" tag. Throws ProtocolError on malformed
// payloads.
Message parse_message(const std::string& payload);

// Framing over a connected socket: 4-byte big-endian length, then the UTF-8
// JSON payload. read_frame returns nullopt on clean EOF and throws
// ProtocolError on truncated frames or transport errors.
void write_frame(int fd, const std::string& payload);
std::optional<std::string> read_frame(int fd);

const char* perturbation_kind_name(PerturbationKind kind);
PerturbationKind perturbation_kind_from_name(const std::string& name);

}  // namespace tokenfuse::wire
