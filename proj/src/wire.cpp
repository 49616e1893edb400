#include "tokenfuse/wire.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <nlohmann/json.hpp>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/floatfmt.hpp"

namespace tokenfuse::wire {

using json = nlohmann::json;

namespace {

json floats_to_json(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) {
    arr.push_back(format_double17(v));
  }
  return arr;
}

std::vector<double> floats_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) {
    throw ProtocolError(std::string(what) + " is not an array");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (v.is_string()) {
      out.push_back(parse_double17(v.get<std::string>()));
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      throw ProtocolError(std::string(what) + " element is not numeric");
    }
  }
  return out;
}

json perturbation_to_json(const PerturbationSpec& spec) {
  return json{{"kind", perturbation_kind_name(spec.kind)},
              {"noise_steps", spec.noise_steps}};
}

PerturbationSpec perturbation_from_json(const json& j) {
  PerturbationSpec spec;
  spec.kind = perturbation_kind_from_name(j.at("kind").get<std::string>());
  spec.noise_steps = j.at("noise_steps").get<int>();
  return spec;
}

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ProtocolError(std::string("message missing field '") + key + "'");
  }
  return *it;
}

}  // namespace

const char* perturbation_kind_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::provider_native: return "provider_native";
    case PerturbationKind::trace_channel: return "trace_channel";
  }
  return "none";
}

PerturbationKind perturbation_kind_from_name(const std::string& name) {
  if (name == "none") return PerturbationKind::none;
  if (name == "provider_native") return PerturbationKind::provider_native;
  if (name == "trace_channel") return PerturbationKind::trace_channel;
  throw ProtocolError("unknown perturbation kind: '" + name + "'");
}

std::string encode(const HelloRequest& m) {
  json j{{"type", "hello"},
         {"protocol_version", m.protocol_version},
         {"session_id", m.session_id}};
  return j.dump();
}

std::string encode(const HelloResponse& m) {
  json j{{"type", "hello_ok"},
         {"model_name", m.model_name},
         {"vocab", m.vocab},
         {"fingerprint", m.fingerprint}};
  return j.dump();
}

std::string encode(const LogitRequest& m) {
  json j{{"type", "logits"},
         {"session_id", m.session_id},
         {"step", m.step},
         {"context",
          {{"prompt_tokens", m.prompt_tokens},
           {"generated_tokens", m.generated_tokens},
           {"input_id", m.input_id}}},
         {"perturbation", perturbation_to_json(m.perturbation)},
         {"want_channels",
          m.want_channels == WantChannels::both ? "both" : "original_only"}};
  return j.dump();
}

std::string encode(const LogitResponse& m) {
  json j{{"type", "logits_ok"},
         {"session_id", m.session_id},
         {"step", m.step},
         {"original", floats_to_json(m.original)},
         {"vocab_fingerprint", m.vocab_fingerprint}};
  if (m.perturbed.has_value()) {
    j["perturbed"] = floats_to_json(*m.perturbed);
  }
  return j.dump();
}

std::string encode(const WireError& m) {
  json j{{"type", "error"}, {"code", m.code}, {"message", m.message}};
  return j.dump();
}

Message parse_message(const std::string& payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad JSON payload: ") + e.what());
  }
  if (!j.is_object()) {
    throw ProtocolError("message is not a JSON object");
  }
  const std::string type = require(j, "type").get<std::string>();

  try {
    if (type == "hello") {
      HelloRequest m;
      m.protocol_version = require(j, "protocol_version").get<int>();
      m.session_id = require(j, "session_id").get<std::string>();
      return m;
    }
    if (type == "hello_ok") {
      HelloResponse m;
      m.model_name = require(j, "model_name").get<std::string>();
      m.vocab = require(j, "vocab").get<std::vector<std::string>>();
      m.fingerprint = require(j, "fingerprint").get<std::string>();
      return m;
    }
    if (type == "logits") {
      LogitRequest m;
      m.session_id = require(j, "session_id").get<std::string>();
      m.step = require(j, "step").get<int>();
      const json& ctx = require(j, "context");
      m.prompt_tokens = require(ctx, "prompt_tokens").get<std::vector<int>>();
      m.generated_tokens = require(ctx, "generated_tokens").get<std::vector<int>>();
      m.input_id = require(ctx, "input_id").get<std::string>();
      m.perturbation = perturbation_from_json(require(j, "perturbation"));
      const std::string channels = require(j, "want_channels").get<std::string>();
      if (channels == "both") {
        m.want_channels = WantChannels::both;
      } else if (channels == "original_only") {
        m.want_channels = WantChannels::original_only;
      } else {
        throw ProtocolError("unknown want_channels: '" + channels + "'");
      }
      return m;
    }
    if (type == "logits_ok") {
      LogitResponse m;
      m.session_id = require(j, "session_id").get<std::string>();
      m.step = require(j, "step").get<int>();
      m.original = floats_from_json(require(j, "original"), "original");
      if (j.contains("perturbed")) {
        m.perturbed = floats_from_json(j["perturbed"], "perturbed");
      }
      m.vocab_fingerprint = require(j, "vocab_fingerprint").get<std::string>();
      return m;
    }
    if (type == "error") {
      WireError m;
      m.code = require(j, "code").get<std::string>();
      m.message = require(j, "message").get<std::string>();
      return m;
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad field in '") + type + "' message: " + e.what());
  }
  throw ProtocolError("unknown message type: '" + type + "'");
}

void write_frame(int fd, const std::string& payload) {
  if (payload.size() > kMaxFrameBytes) {
    throw ProtocolError("frame exceeds maximum size");
  }
  const uint32_t n = static_cast<uint32_t>(payload.size());
  unsigned char header[4] = {
      static_cast<unsigned char>((n >> 24) & 0xFF),
      static_cast<unsigned char>((n >> 16) & 0xFF),
      static_cast<unsigned char>((n >> 8) & 0xFF),
      static_cast<unsigned char>(n & 0xFF),
  };
  std::string buf(reinterpret_cast<char*>(header), 4);
  buf += payload;

  std::size_t sent = 0;
  while (sent < buf.size()) {
    const ssize_t w = ::send(fd, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) {
        continue;
      }
      throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(w);
  }
}

namespace {

// Reads exactly n bytes. Returns false only on EOF before the first byte.
bool read_exact(int fd, void* dst, std::size_t n) {
  auto* p = static_cast<char*>(dst);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r == 0) {
      if (got == 0) {
        return false;
      }
      throw ProtocolError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) {
        continue;
      }
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw ProtocolError("receive timed out");
      }
      throw ProtocolError(std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::optional<std::string> read_frame(int fd) {
  unsigned char header[4];
  if (!read_exact(fd, header, 4)) {
    return std::nullopt;
  }
  const uint32_t n = (static_cast<uint32_t>(header[0]) << 24) |
                     (static_cast<uint32_t>(header[1]) << 16) |
                     (static_cast<uint32_t>(header[2]) << 8) |
                     static_cast<uint32_t>(header[3]);
  if (n > kMaxFrameBytes) {
    throw ProtocolError("incoming frame exceeds maximum size");
  }
  std::string payload(n, '\0');
  if (n > 0 && !read_exact(fd, payload.data(), n)) {
    throw ProtocolError("connection closed mid-frame");
  }
  return payload;
}

}  // namespace tokenfuse::wire
