#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dvrisk/markers.hpp"
#include "dvrisk/models.hpp"

namespace dvrisk::service {

inline constexpr std::size_t kMaxNarrativeBytes = 64 * 1024;

struct Request {
  std::string method;
  std::string path;
  std::string content_type;
  std::string origin;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// True for http(s) origins on localhost, 127.0.0.0/8 or [::1].
bool is_loopback_origin(const std::string& origin);

/// Request handling without any network dependency; the HTTP server is a thin
/// adapter around handle(). Models are set once during startup and never
/// modified afterwards, so handle() is safe to call concurrently.
class Service {
 public:
  explicit Service(markers::MarkerLexicon lexicon);

  /// Installs the frozen models and marks the service ready. Either may be
  /// absent; its endpoint then answers 503.
  void load(std::optional<models::RiskClassifier> risk, std::optional<models::NextEventPredictor> next);
  bool ready() const { return ready_.load(); }

  Response handle(const Request& request) const;

 private:
  Response risk(const Request& request) const;
  Response next_event(const Request& request) const;
  Response markers() const;
  Response health() const;

  markers::MarkerLexicon lexicon_;
  std::optional<models::RiskClassifier> risk_;
  std::optional<models::NextEventPredictor> next_;
  std::atomic<bool> ready_{false};
  std::chrono::steady_clock::time_point started_at_;
};

/// HTTP/1.1 front end. bind() reports the bound port (useful with port 0);
/// listen() blocks until stop() is called from another thread.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Throws IoFailure when the address cannot be bound.
  int bind(const std::string& host, int port);
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dvrisk::service
