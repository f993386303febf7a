#include "dvrisk/service.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "dvrisk/error.hpp"

namespace dvrisk::service {

using nlohmann::ordered_json;

namespace {

Response json_response(int status, const ordered_json& body) { return {status, body.dump(), {}}; }

Response error_response(int status, std::string_view error, const std::string& message) {
  ordered_json body;
  body["error"] = error;
  body["message"] = message;
  return json_response(status, body);
}

bool is_json_content(const std::string& content_type) {
  std::string media = content_type.substr(0, content_type.find(';'));
  media.erase(std::remove_if(media.begin(), media.end(), [](unsigned char c) { return std::isspace(c); }),
              media.end());
  std::transform(media.begin(), media.end(), media.begin(), [](unsigned char c) { return std::tolower(c); });
  return media == "application/json";
}

// Parses a JSON object body; returns nullopt after filling `error`.
std::optional<nlohmann::json> parse_body(const Request& request, Response& error) {
  if (!is_json_content(request.content_type)) {
    error = error_response(415, "UnsupportedMediaType", "content-type must be application/json");
    return std::nullopt;
  }
  nlohmann::json doc = nlohmann::json::parse(request.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    error = error_response(400, "InvalidArgument", "body must be a JSON object");
    return std::nullopt;
  }
  return doc;
}

}  // namespace

bool is_loopback_origin(const std::string& origin) {
  static const std::regex pattern(R"(^https?://(localhost|127(\.\d{1,3}){3}|\[::1\])(:\d{1,5})?$)",
                                  std::regex::icase);
  return std::regex_match(origin, pattern);
}

Service::Service(markers::MarkerLexicon lexicon)
    : lexicon_(std::move(lexicon)), started_at_(std::chrono::steady_clock::now()) {}

void Service::load(std::optional<models::RiskClassifier> risk, std::optional<models::NextEventPredictor> next) {
  if (ready_.load()) throw Error(ErrorKind::InvalidArgument, "models are already loaded");
  risk_ = std::move(risk);
  next_ = std::move(next);
  started_at_ = std::chrono::steady_clock::now();
  ready_.store(true);
}

Response Service::handle(const Request& request) const {
  Response response;
  const bool known_path = request.path == "/health" || request.path == "/api/v1/risk" ||
                          request.path == "/api/v1/next-event" || request.path == "/api/v1/markers";
  const bool cors = !request.origin.empty() && is_loopback_origin(request.origin);

  if (!known_path) {
    response = error_response(404, "NotFound", "no such endpoint: " + request.path);
  } else if (request.method == "OPTIONS") {
    if (cors) {
      response = {204, "", {}};
      response.headers.emplace_back("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      response.headers.emplace_back("Access-Control-Allow-Headers", "Content-Type");
      response.headers.emplace_back("Access-Control-Max-Age", "600");
    } else {
      response = error_response(403, "Forbidden", "cross-origin requests are only accepted from loopback origins");
    }
  } else {
    const bool is_post = request.path == "/api/v1/risk" || request.path == "/api/v1/next-event";
    const std::string expected = is_post ? "POST" : "GET";
    if (request.method != expected) {
      response = error_response(405, "MethodNotAllowed", request.path + " accepts " + expected + " only");
      response.headers.emplace_back("Allow", expected);
    } else if (request.path == "/health") {
      response = health();
    } else if (request.path == "/api/v1/markers") {
      response = markers();
    } else if (request.path == "/api/v1/risk") {
      response = risk(request);
    } else {
      response = next_event(request);
    }
  }
  if (cors) {
    response.headers.emplace_back("Access-Control-Allow-Origin", request.origin);
    response.headers.emplace_back("Vary", "Origin");
  }
  return response;
}

Response Service::health() const {
  ordered_json body;
  if (!ready()) {
    body["status"] = "loading";
    return json_response(503, body);
  }
  const std::chrono::duration<double> up = std::chrono::steady_clock::now() - started_at_;
  body["status"] = "ok";
  body["uptime_seconds"] = up.count();
  body["risk_model"] = risk_.has_value();
  body["next_event_model"] = next_.has_value();
  return json_response(200, body);
}

Response Service::markers() const {
  std::vector<const markers::MarkerEntry*> entries;
  for (const auto& e : lexicon_.entries()) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](const markers::MarkerEntry* a, const markers::MarkerEntry* b) {
    if (a->severity_rank.has_value() != b->severity_rank.has_value()) return a->severity_rank.has_value();
    if (a->severity_rank != b->severity_rank) return *a->severity_rank < *b->severity_rank;
    return a->canonical_name < b->canonical_name;
  });
  auto list = ordered_json::array();
  for (const auto* e : entries) {
    ordered_json item;
    item["name"] = e->canonical_name;
    item["severity_rank"] = e->severity_rank ? ordered_json(*e->severity_rank) : ordered_json(nullptr);
    item["specializes"] = e->specializes ? ordered_json(*e->specializes) : ordered_json(nullptr);
    item["paper_frequency"] = e->paper_frequency ? ordered_json(*e->paper_frequency) : ordered_json(nullptr);
    list.push_back(std::move(item));
  }
  ordered_json body;
  body["markers"] = std::move(list);
  return json_response(200, body);
}

Response Service::risk(const Request& request) const {
  Response error;
  auto doc = parse_body(request, error);
  if (!doc) return error;
  if (!ready() || !risk_) return error_response(503, "ModelNotLoaded", "risk model is not loaded");
  auto it = doc->find("narrative");
  if (it == doc->end() || !it->is_string()) {
    return error_response(400, "InvalidArgument", "'narrative' must be a string");
  }
  const auto& narrative = it->get_ref<const std::string&>();
  if (narrative.size() > kMaxNarrativeBytes) {
    return error_response(400, "InvalidArgument", "narrative exceeds 65536 bytes");
  }
  try {
    const auto p = models::predict_risk(*risk_, narrative);
    ordered_json body;
    body["probability_lower_risk"] = p.probability_lower_risk;
    body["label"] = p.label == corpus::RiskLabel::LowerRisk ? "lower" : "higher";
    body["label_code"] = static_cast<int>(p.label);
    return json_response(200, body);
  } catch (const Error& e) {
    return error_response(400, to_string(e.kind()), e.what());
  }
}

Response Service::next_event(const Request& request) const {
  Response error;
  auto doc = parse_body(request, error);
  if (!doc) return error;
  if (!ready() || !next_) return error_response(503, "ModelNotLoaded", "next-event model is not loaded");
  auto events_it = doc->find("events");
  if (events_it == doc->end() || !events_it->is_array()) {
    return error_response(400, "InvalidArgument", "'events' must be an array of marker names");
  }
  std::vector<std::string> events;
  for (const auto& e : *events_it) {
    if (!e.is_string()) return error_response(400, "InvalidArgument", "'events' must contain only strings");
    events.push_back(e.get<std::string>());
  }
  std::size_t top_k = 5;
  if (auto k = doc->find("top_k"); k != doc->end()) {
    if (!k->is_number_integer() || k->get<long long>() < 1) {
      return error_response(400, "InvalidArgument", "'top_k' must be an integer >= 1");
    }
    top_k = static_cast<std::size_t>(k->get<long long>());
  }
  try {
    auto candidates = models::predict_next_event(*next_, events, top_k);
    auto list = ordered_json::array();
    for (const auto& c : candidates) {
      ordered_json item;
      item["marker"] = c.marker;
      item["probability"] = c.probability;
      list.push_back(std::move(item));
    }
    ordered_json body;
    body["candidates"] = std::move(list);
    return json_response(200, body);
  } catch (const Error& e) {
    return error_response(400, to_string(e.kind()), e.what());
  }
}

struct HttpServer::Impl {
  const Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(new Impl{service, {}}) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    r.content_type = req.get_header_value("Content-Type");
    r.origin = req.get_header_value("Origin");
    r.body = req.body;
    const Response out = impl_->service.handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    if (out.status != 204) res.set_content(out.body, "application/json");
  };
  impl_->server.set_payload_max_length(4 * kMaxNarrativeBytes);
  impl_->server.Get(".*", forward);
  impl_->server.Post(".*", forward);
  impl_->server.Put(".*", forward);
  impl_->server.Delete(".*", forward);
  impl_->server.Options(".*", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorKind::IoFailure, "cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace dvrisk::service
