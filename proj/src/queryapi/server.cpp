#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "millstone/queryapi/auth.hpp"
#include "millstone/queryapi/executor.hpp"
#include "millstone/queryapi/schema.hpp"
#include "millstone/queryapi/server.hpp"

namespace millstone::queryapi {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

}  // namespace

struct ApiServer::State {
  const Engine& engine;
  ServerConfig config;
  httplib::Server http;
  std::thread worker;
  int port = -1;

  State(const Engine& e, ServerConfig c) : engine(e), config(std::move(c)) {}
};

ApiServer::ApiServer(const Engine& engine, ServerConfig config)
    : state_(std::make_unique<State>(engine, std::move(config))) {
  if (state_->config.signing_key.empty()) {
    throw Error(ErrorCode::InvalidArgument, "a signing key is required to serve the API");
  }
  State& s = *state_;
  const std::size_t threads = std::max<std::size_t>(1, s.config.threads);
  s.http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

  s.http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"status", "ok"}});
  });
  s.http.Get("/api/schema", [](const httplib::Request&, httplib::Response& res) {
    send(res, 200, schema_document());
  });
  s.http.Post("/api", [&s](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> header;
    if (req.has_header("Authorization")) header = req.get_header_value("Authorization");
    try {
      authenticate(header, s.config.signing_key);
    } catch (const Error& e) {
      res.set_header("WWW-Authenticate", "Bearer");
      send(res, 401, {{"errors", json::array({ApiError::from(e).to_json()})}});
      return;
    }
    const auto response = handle_api_request(req.body, s.engine);
    send(res, response.status, response.body);
  });
  s.http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, 500, {{"errors", json::array({{{"code", "INTERNAL"}, {"message", what}, {"path", json::array()}}})}});
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  State& s = *state_;
  if (s.port >= 0) return s.port;
  if (s.config.port == 0) {
    s.port = s.http.bind_to_any_port(s.config.host);
  } else {
    s.port = s.http.bind_to_port(s.config.host, s.config.port) ? s.config.port : -1;
  }
  if (s.port < 0) {
    throw Error(ErrorCode::Io, "cannot listen on " + s.config.host + ":" + std::to_string(s.config.port));
  }
  return s.port;
}

void ApiServer::serve() {
  bind();
  state_->http.listen_after_bind();
}

void ApiServer::start() {
  bind();
  state_->worker = std::thread([this] { state_->http.listen_after_bind(); });
  state_->http.wait_until_ready();
}

void ApiServer::stop() {
  if (!state_) return;
  state_->http.stop();
  if (state_->worker.joinable()) state_->worker.join();
}

int ApiServer::port() const noexcept { return state_->port; }

}  // namespace millstone::queryapi
