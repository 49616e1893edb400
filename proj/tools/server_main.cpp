// Reference logit server: serves one model's recorded channels from a trace
// over the framed-JSON protocol.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <memory>
#include <thread>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/server.hpp"
#include "tokenfuse/trace.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference logit server (framed-JSON protocol over TCP)"};

  std::string listen_address = "127.0.0.1:7701";
  std::string trace_path;
  int model_index = 0;
  std::string model_name = "trace-model";

  app.add_option("--listen", listen_address, "host:port (port 0 picks one)");
  app.add_option("--trace", trace_path, "Trace file to serve")->required();
  app.add_option("--model-index", model_index, "Which trace model to serve");
  app.add_option("--model-name", model_name, "Name reported in the handshake");

  CLI11_PARSE(app, argc, argv);

  try {
    auto trace = std::make_shared<const tokenfuse::Trace>(tokenfuse::read_trace(trace_path));
    tokenfuse::ReferenceServer server(trace, model_index, model_name, listen_address);
    server.start();
    std::cout << "serving model " << model_index << " ('" << model_name << "') of "
              << trace_path << " on " << server.endpoint() << std::endl;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    return 0;
  } catch (const tokenfuse::InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tokenfuse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
