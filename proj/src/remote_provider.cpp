#include "tokenfuse/remote_provider.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <variant>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/wire.hpp"

namespace tokenfuse {

namespace {

// "host:port" -> connected socket fd.
int connect_endpoint(const std::string& endpoint, double timeout_seconds) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) {
    throw InvalidConfig("endpoint must be host:port, got '" + endpoint + "'");
  }
  const std::string host = endpoint.substr(0, colon);
  const std::string port = endpoint.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0) {
    throw ProviderUnavailable("cannot resolve '" + endpoint +
                              "': " + gai_strerror(rc));
  }

  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      break;
    }
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) {
    throw ProviderUnavailable("cannot connect to '" + endpoint + "'");
  }

  timeval tv{};
  tv.tv_sec = static_cast<long>(timeout_seconds);
  tv.tv_usec = static_cast<long>((timeout_seconds - std::floor(timeout_seconds)) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  return fd;
}

[[noreturn]] void throw_wire_error(const wire::WireError& err) {
  if (err.code == "TraceExhausted") throw TraceExhausted(err.message);
  if (err.code == "OutOfOrderStep") throw OutOfOrderStep(err.message);
  if (err.code == "UnknownSession") throw UnknownSession(err.message);
  if (err.code == "ProtocolVersionMismatch") throw ProtocolVersionMismatch(err.message);
  if (err.code == "VocabularyMismatch") throw VocabularyMismatch(err.message);
  throw ProviderUnavailable(err.code + ": " + err.message);
}

}  // namespace

RemoteProvider::RemoteProvider(int provider_id, const std::string& endpoint,
                               const std::string& session_id,
                               double timeout_seconds)
    : provider_id_(provider_id), endpoint_(endpoint), session_id_(session_id) {
  fd_ = connect_endpoint(endpoint, timeout_seconds);

  try {
    wire::HelloRequest hello;
    hello.session_id = session_id_;
    wire::write_frame(fd_, wire::encode(hello));
    const auto payload = wire::read_frame(fd_);
    if (!payload.has_value()) {
      throw ProviderUnavailable("server closed connection during handshake");
    }
    const wire::Message msg = wire::parse_message(*payload);
    if (const auto* err = std::get_if<wire::WireError>(&msg)) {
      throw_wire_error(*err);
    }
    const auto* ok = std::get_if<wire::HelloResponse>(&msg);
    if (ok == nullptr) {
      throw ProtocolError("unexpected handshake reply");
    }
    vocab_.tokens = ok->vocab;
    vocab_.validate();
    if (vocab_.fingerprint_hex() != ok->fingerprint) {
      throw VocabularyMismatch("server '" + endpoint_ + "' fingerprint " +
                               ok->fingerprint + " does not match its vocabulary (" +
                               vocab_.fingerprint_hex() + ")");
    }
    model_name_ = ok->model_name;
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

RemoteProvider::~RemoteProvider() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

ProviderDescriptor RemoteProvider::descriptor() const {
  ProviderDescriptor d;
  d.provider_id = provider_id_;
  d.kind = ProviderKind::remote;
  d.endpoint_or_path = endpoint_;
  d.vocabulary_fingerprint = vocab_.fingerprint();
  return d;
}

LogitPair RemoteProvider::next_logits(const DecodingContext& context) {
  const bool want_both = context.perturbation.kind != PerturbationKind::none;

  wire::LogitRequest req;
  req.session_id = session_id_;
  req.step = context.step();
  req.prompt_tokens = context.prompt_tokens;
  req.generated_tokens = context.generated_tokens;
  req.input_id = context.input_id;
  req.perturbation = context.perturbation;
  req.want_channels =
      want_both ? wire::WantChannels::both : wire::WantChannels::original_only;

  std::optional<std::string> payload;
  try {
    wire::write_frame(fd_, wire::encode(req));
    payload = wire::read_frame(fd_);
  } catch (const ProtocolError& e) {
    throw ProviderUnavailable("provider '" + endpoint_ + "': " + e.what());
  }
  if (!payload.has_value()) {
    throw ProviderUnavailable("provider '" + endpoint_ + "' closed the connection");
  }

  const wire::Message msg = wire::parse_message(*payload);
  if (const auto* err = std::get_if<wire::WireError>(&msg)) {
    throw_wire_error(*err);
  }
  const auto* ok = std::get_if<wire::LogitResponse>(&msg);
  if (ok == nullptr) {
    throw ProtocolError("unexpected reply to logits request");
  }
  if (ok->vocab_fingerprint != vocab_.fingerprint_hex()) {
    throw VocabularyMismatch("provider '" + endpoint_ +
                             "' changed vocabulary mid-session");
  }

  LogitPair pair;
  pair.original.scores = ok->original;
  if (want_both) {
    if (!ok->perturbed.has_value()) {
      throw ProtocolError("server omitted the perturbed channel");
    }
    pair.perturbed.scores = *ok->perturbed;
  } else {
    pair.perturbed = pair.original;
  }
  if (pair.original.size() != vocab_.size() || pair.perturbed.size() != vocab_.size()) {
    throw ProtocolError("provider '" + endpoint_ +
                        "' returned arrays of the wrong length");
  }
  return pair;
}

}  // namespace tokenfuse
