#pragma once

// HTTP front end: POST /api (bearer token required), GET /api/schema and
// GET /healthz (open).

#include <memory>
#include <string>

#include "millstone/engine.hpp"

namespace millstone::queryapi {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string signing_key;
  std::size_t threads = 8;
};

class ApiServer {
 public:
  // Throws Error(InvalidArgument) when the signing key is empty.
  ApiServer(const Engine& engine, ServerConfig config);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds the listening socket and returns the port. Throws Error(Io).
  int bind();
  // Serves until stop(); binds first if needed.
  void serve();
  // bind() and serve() on a background thread; returns once accepting.
  void start();
  // Stops accepting, lets in-flight requests finish, joins the background
  // thread. Safe to call from a signal-watching thread and more than once.
  void stop();

  int port() const noexcept;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace millstone::queryapi
