#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dvrisk/corpus.hpp"
#include "dvrisk/service.hpp"

using namespace dvrisk;
using namespace dvrisk::service;
using nlohmann::json;

namespace {

struct Fixture {
  models::TrainedClassifier risk;
  models::TrainedPredictor next;
  std::vector<corpus::LabeledItem> items;

  Fixture() {
    corpus::GeneratorConfig g;
    g.higher_count = 8;
    g.lower_count = 12;
    g.femicide_count = 6;
    g.sequence_cases = 6;
    const auto& lex = markers::MarkerLexicon::default_lexicon();
    const auto labeled = corpus::label_corpus(corpus::generate_synthetic_corpus(g, lex, 11));
    items = labeled.items;
    models::ClassifierConfig c;
    c.hidden_units = 8;
    c.embed_dim = 6;
    c.epochs = 5;
    c.batch_size = 8;
    risk = models::train_risk_classifier(labeled, c);

    models::PredictorConfig p;
    p.hidden_units = 16;
    p.embed_dim = 8;
    p.epochs = 400;
    p.learning_rate = 0.01;
    p.stop_loss = 0.01;
    const std::vector<markers::EventSequence> seqs{
        {"T1", {"Discussion", "Verbal Offense", "Physical Violence", "Verbal Offense"}, false}};
    next = models::train_next_event(seqs, models::MarkerVocabulary::from_lexicon(lex), p);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Service& loaded_service() {
  static Service svc(markers::MarkerLexicon::default_lexicon());
  static const bool once = [] {
    svc.load(fixture().risk.classifier, fixture().next.predictor);
    return true;
  }();
  (void)once;
  return svc;
}

Request post(std::string path, std::string body, std::string content_type = "application/json") {
  return {"POST", std::move(path), std::move(content_type), "", std::move(body)};
}

Request get(std::string path) { return {"GET", std::move(path), "", "", ""}; }

}  // namespace

TEST_CASE("health before and after loading") {
  Service svc(markers::MarkerLexicon::default_lexicon());
  auto before = svc.handle(get("/health"));
  CHECK(before.status == 503);
  CHECK(svc.handle(post("/api/v1/risk", R"({"narrative":"x"})")).status == 503);
  CHECK(svc.handle(post("/api/v1/next-event", R"({"events":["Kick"],"top_k":1})")).status == 503);
  CHECK(svc.handle(get("/api/v1/markers")).status == 200);

  svc.load(std::nullopt, std::nullopt);
  auto a = json::parse(svc.handle(get("/health")).body);
  CHECK(a["status"] == "ok");
  auto b = json::parse(svc.handle(get("/health")).body);
  CHECK(b["uptime_seconds"].get<double>() >= a["uptime_seconds"].get<double>());
  CHECK(svc.handle(post("/api/v1/risk", R"({"narrative":"x"})")).status == 503);
}

TEST_CASE("risk endpoint") {
  auto& svc = loaded_service();
  const auto& f = fixture();
  const std::string narrative = f.items.front().report.narrative;
  json req{{"narrative", narrative}};
  auto r = svc.handle(post("/api/v1/risk", req.dump()));
  REQUIRE(r.status == 200);
  auto body = json::parse(r.body);
  const auto direct = models::predict_risk(f.risk.classifier, narrative);
  CHECK(body["probability_lower_risk"].get<double>() == direct.probability_lower_risk);
  CHECK(body["label_code"] == static_cast<int>(direct.label));
  CHECK(body["label"] == (direct.label == corpus::RiskLabel::LowerRisk ? "lower" : "higher"));
  CHECK(svc.handle(post("/api/v1/risk", req.dump())).body == r.body);

  CHECK(svc.handle(post("/api/v1/risk", R"({"narrative":""})")).status == 400);
  CHECK(svc.handle(post("/api/v1/risk", R"({"narrative":"   "})")).status == 400);
  CHECK(svc.handle(post("/api/v1/risk", R"({"text":"abc"})")).status == 400);
  CHECK(svc.handle(post("/api/v1/risk", "not json")).status == 400);
  CHECK(svc.handle(post("/api/v1/risk", json{{"narrative", std::string(64 * 1024 + 1, 'a')}}.dump())).status == 400);
  CHECK(svc.handle(post("/api/v1/risk", json{{"narrative", std::string(64 * 1024, 'a')}}.dump())).status == 200);
  CHECK(svc.handle(post("/api/v1/risk", req.dump(), "text/plain")).status == 415);
  CHECK(svc.handle(post("/api/v1/risk", req.dump(), "application/json; charset=utf-8")).status == 200);
  CHECK(svc.handle(get("/api/v1/risk")).status == 405);
}

TEST_CASE("next-event endpoint") {
  auto& svc = loaded_service();
  auto r = svc.handle(post("/api/v1/next-event",
                           R"({"events":["Discussion","Verbal Offense","Physical Violence"],"top_k":3})"));
  REQUIRE(r.status == 200);
  auto body = json::parse(r.body);
  REQUIRE(body["candidates"].size() == 3);
  CHECK(body["candidates"][0]["marker"] == "Verbal Offense");
  CHECK(body["candidates"][0]["probability"].get<double>() >= body["candidates"][1]["probability"].get<double>());

  auto all = json::parse(svc.handle(post("/api/v1/next-event", R"({"events":["Discussion"],"top_k":500})")).body);
  CHECK(all["candidates"].size() == 24);

  auto bad = svc.handle(post("/api/v1/next-event", R"({"events":["NotAMarker"],"top_k":1})"));
  CHECK(bad.status == 400);
  CHECK(bad.body.find("NotAMarker") != std::string::npos);
  CHECK(svc.handle(post("/api/v1/next-event", R"({"events":[],"top_k":1})")).status == 400);
  CHECK(svc.handle(post("/api/v1/next-event", R"({"events":["Kick"],"top_k":0})")).status == 400);
  CHECK(svc.handle(post("/api/v1/next-event", R"({"events":"Kick","top_k":1})")).status == 400);
}

TEST_CASE("markers endpoint") {
  auto& svc = loaded_service();
  auto body = json::parse(svc.handle(get("/api/v1/markers")).body);
  const auto& list = body["markers"];
  REQUIRE(list.size() == 24);
  bool seen_null = false;
  for (std::size_t i = 0; i < list.size(); ++i) {
    CHECK_FALSE(list[i].contains("stems"));
    if (list[i]["severity_rank"].is_null()) {
      seen_null = true;
      if (i > 0 && list[i - 1]["severity_rank"].is_null()) CHECK(list[i - 1]["name"] < list[i]["name"]);
    } else {
      CHECK_FALSE(seen_null);
      if (i > 0) {
        const auto prev = list[i - 1]["severity_rank"].get<int>(), cur = list[i]["severity_rank"].get<int>();
        CHECK(prev <= cur);
        if (prev == cur) CHECK(list[i - 1]["name"] < list[i]["name"]);
      }
    }
    if (list[i]["name"] == "Verbal Offense") CHECK(list[i]["paper_frequency"] == 29);
  }
  bool has_femicide = false;
  for (const auto& m : list) has_femicide = has_femicide || m["name"] == "Femicide";
  CHECK(has_femicide);
}

TEST_CASE("cors and routing") {
  auto& svc = loaded_service();
  CHECK(is_loopback_origin("http://localhost:5173"));
  CHECK(is_loopback_origin("http://127.0.0.1"));
  CHECK(is_loopback_origin("http://[::1]:8080"));
  CHECK_FALSE(is_loopback_origin("http://example.com"));
  CHECK_FALSE(is_loopback_origin("http://localhost.evil.com"));

  Request pre{"OPTIONS", "/api/v1/risk", "", "http://localhost:5173", ""};
  auto r = svc.handle(pre);
  CHECK(r.status == 204);
  auto has = [&](const Response& resp, const std::string& k, const std::string& v) {
    for (const auto& [hk, hv] : resp.headers) {
      if (hk == k && hv == v) return true;
    }
    return false;
  };
  CHECK(has(r, "Access-Control-Allow-Origin", "http://localhost:5173"));
  Request foreign{"OPTIONS", "/api/v1/risk", "", "http://example.com", ""};
  auto f = svc.handle(foreign);
  CHECK(f.status == 403);
  CHECK_FALSE(has(f, "Access-Control-Allow-Origin", "http://example.com"));
  CHECK(svc.handle(get("/nope")).status == 404);
}

TEST_CASE("loopback HTTP server") {
  auto& svc = loaded_service();
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 100 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  const std::string body = R"({"events":["Discussion","Verbal Offense","Physical Violence"],"top_k":2})";
  auto next = client.Post("/api/v1/next-event", body, "application/json");
  REQUIRE(next);
  CHECK(next->status == 200);
  CHECK(next->body == svc.handle(post("/api/v1/next-event", body)).body);

  auto wrong_type = client.Post("/api/v1/risk", R"({"narrative":"x"})", "text/plain");
  REQUIRE(wrong_type);
  CHECK(wrong_type->status == 415);

  httplib::Headers origin{{"Origin", "http://127.0.0.1:3000"}};
  auto markers = client.Get("/api/v1/markers", origin);
  REQUIRE(markers);
  CHECK(markers->get_header_value("Access-Control-Allow-Origin") == "http://127.0.0.1:3000");

  // Concurrent identical requests see identical bodies.
  std::vector<std::string> bodies(4);
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    workers.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port);
      if (auto res = c.Post("/api/v1/next-event", body, "application/json")) bodies[i] = res->body;
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& b : bodies) CHECK(b == next->body);

  server.stop();
  t.join();

}
