#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tokenfuse/trace.hpp"

namespace tokenfuse {

// Reference logit server: serves one model's channels from a recorded trace
// over the framed-JSON protocol. Handles connections concurrently; within a
// connection, requests are strictly ordered (one session per connection,
// steps must arrive sequentially from 0).
class ReferenceServer {
 public:
  ReferenceServer(std::shared_ptr<const Trace> trace, int model_index,
                  std::string model_name, const std::string& listen_address);
  ~ReferenceServer();

  ReferenceServer(const ReferenceServer&) = delete;
  ReferenceServer& operator=(const ReferenceServer&) = delete;

  // Begins accepting connections; returns once the listener is live.
  void start();
  void stop();

  int port() const { return port_; }
  std::string endpoint() const { return host_ + ":" + std::to_string(port_); }

 private:
  void accept_loop();
  void serve_connection(int fd);

  std::shared_ptr<const Trace> trace_;
  int model_index_;
  std::string model_name_;
  std::string host_;
  int port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace tokenfuse
