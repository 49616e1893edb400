#include "tokenfuse/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <variant>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/wire.hpp"

namespace tokenfuse {

ReferenceServer::ReferenceServer(std::shared_ptr<const Trace> trace,
                                 int model_index, std::string model_name,
                                 const std::string& listen_address)
    : trace_(std::move(trace)),
      model_index_(model_index),
      model_name_(std::move(model_name)) {
  if (!trace_) {
    throw InvalidConfig("server needs a trace");
  }
  if (model_index_ < 0 || model_index_ >= trace_->num_models) {
    throw InvalidConfig("trace has " + std::to_string(trace_->num_models) +
                        " models, server asked to serve model " +
                        std::to_string(model_index_));
  }
  const auto colon = listen_address.rfind(':');
  if (colon == std::string::npos) {
    throw InvalidConfig("listen address must be host:port, got '" +
                        listen_address + "'");
  }
  host_ = listen_address.substr(0, colon);
  port_ = std::stoi(listen_address.substr(colon + 1));
}

ReferenceServer::~ReferenceServer() { stop(); }

void ReferenceServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw ProviderUnavailable(std::string("socket failed: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port_));
  if (host_ == "0.0.0.0" || host_.empty()) {
    addr.sin_addr.s_addr = INADDR_ANY;
  } else if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw InvalidConfig("listen host must be an IPv4 address, got '" + host_ + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw ProviderUnavailable("bind failed: " + msg);
  }
  if (::listen(listen_fd_, 16) != 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw ProviderUnavailable("listen failed: " + msg);
  }

  // Recover the ephemeral port when asked to bind port 0.
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len) == 0) {
    port_ = ntohs(bound.sin_port);
  }

  running_.store(true);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void ReferenceServer::stop() {
  if (!running_.exchange(false)) {
    return;
  }
  // Unblock accept() first; the fd is closed only after the accept thread
  // has joined, so no thread touches it concurrently.
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) {
    accept_thread_.join();
  }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int fd : client_fds_) {
      ::shutdown(fd, SHUT_RDWR);
    }
  }
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    workers.swap(workers_);
  }
  for (std::thread& w : workers) {
    if (w.joinable()) {
      w.join();
    }
  }
}

void ReferenceServer::accept_loop() {
  while (running_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) {
        continue;
      }
      break;  // listener closed
    }
    std::lock_guard<std::mutex> lock(mutex_);
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void ReferenceServer::serve_connection(int fd) {
  std::string session_id;
  bool handshaken = false;
  int next_step = 0;

  auto send = [fd](const std::string& payload) {
    try {
      wire::write_frame(fd, payload);
    } catch (const ProtocolError&) {
      // Peer went away; the read loop will see EOF next.
    }
  };
  auto send_error = [&](const std::string& code, const std::string& message) {
    send(wire::encode(wire::WireError{code, message}));
  };

  try {
    while (running_.load()) {
      const auto payload = wire::read_frame(fd);
      if (!payload.has_value()) {
        break;  // clean EOF
      }

      wire::Message msg;
      try {
        msg = wire::parse_message(*payload);
      } catch (const ProtocolError& e) {
        send_error("ProtocolError", e.what());
        break;
      }

      if (const auto* hello = std::get_if<wire::HelloRequest>(&msg)) {
        if (hello->protocol_version != wire::kProtocolVersion) {
          send_error("ProtocolVersionMismatch",
                     "server speaks version " +
                         std::to_string(wire::kProtocolVersion) + ", client sent " +
                         std::to_string(hello->protocol_version));
          break;
        }
        if (handshaken) {
          // one session per connection; a new session needs a reconnect
          send_error("ProtocolError", "connection already has a session");
          break;
        }
        session_id = hello->session_id;
        handshaken = true;
        next_step = 0;

        wire::HelloResponse resp;
        resp.model_name = model_name_;
        resp.vocab = trace_->vocab.tokens;
        resp.fingerprint = trace_->vocab.fingerprint_hex();
        send(wire::encode(resp));
        continue;
      }

      if (const auto* req = std::get_if<wire::LogitRequest>(&msg)) {
        if (!handshaken) {
          send_error("ProtocolError", "logits request before handshake");
          break;
        }
        if (req->session_id != session_id) {
          send_error("UnknownSession",
                     "connection is bound to session '" + session_id + "'");
          continue;
        }
        if (req->step != next_step) {
          send_error("OutOfOrderStep",
                     "expected step " + std::to_string(next_step) + ", got " +
                         std::to_string(req->step));
          continue;
        }
        if (req->step >= trace_->num_steps()) {
          send_error("TraceExhausted",
                     "trace has " + std::to_string(trace_->num_steps()) + " steps");
          continue;
        }

        const LogitPair& rec = trace_->record(req->step, model_index_);
        wire::LogitResponse resp;
        resp.session_id = session_id;
        resp.step = req->step;
        resp.original = rec.original.scores;
        if (req->want_channels == wire::WantChannels::both) {
          resp.perturbed = rec.perturbed.scores;
        }
        resp.vocab_fingerprint = trace_->vocab.fingerprint_hex();
        send(wire::encode(resp));
        ++next_step;
        continue;
      }

      send_error("ProtocolError", "unexpected message type");
      break;
    }
  } catch (const ProtocolError&) {
    // Transport error; drop the connection.
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    std::erase(client_fds_, fd);
  }
  ::close(fd);
}

}  // namespace tokenfuse
