#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "kbqa/service.hpp"

using namespace kbqa;
using nlohmann::json;

namespace {

// Bundled engine served on an ephemeral port for the lifetime of the fixture.
struct Live {
  std::unique_ptr<Engine> engine = Engine::from_config(bundled_config(KBQA_DATA_DIR));
  Service service{*engine, "secret"};
  int port = service.bind_any_port("127.0.0.1");
  std::thread thread{[this] { service.listen_after_bind(); }};
  httplib::Client client{"127.0.0.1", port};

  Live() { service.wait_until_ready(); }
  ~Live() {
    service.stop();
    thread.join();
  }

  std::pair<int, json> post(const std::string& path, const json& body) {
    auto res = client.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client.Get(path);
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> ask(const std::string& question) { return post("/ask", {{"question", question}}); }
  std::pair<int, json> feedback(const std::string& session, const std::string& step, const json& value) {
    return post("/feedback", {{"session_id", session}, {"step", step}, {"value", value}});
  }
};

std::string error_code(const json& body) { return body.at("error").at("code").get<std::string>(); }

}  // namespace

TEST_CASE("POST /ask answers the worked example") {
  Live live;
  const auto [status, body] = live.ask("Where is the headquarters of Wanke company located?");
  REQUIRE(status == 200);
  const auto& a = body.at("answer");
  CHECK(a.at("answer_text").get<std::string>().find("Shenzhen") != std::string::npos);
  CHECK(a.at("recognition").at("method") == "rule");
  CHECK(a.at("recognition").at("label") == "hq_location");
  CHECK(a.at("rows") == json::array({{{"x", "Shenzhen"}}}));
  CHECK(a.at("columns") == json::array({"x"}));
  CHECK(a.at("cql").get<std::string>().find("[:located]") != std::string::npos);
  CHECK(a.at("trace").size() == 7);
  CHECK_FALSE(body.at("session_id").get<std::string>().empty());
}

TEST_CASE("POST /ask client errors") {
  Live live;
  auto [status, body] = live.ask("   ");
  CHECK(status == 400);
  CHECK(error_code(body) == "empty_input");

  std::tie(status, body) = live.ask(std::string(4097, 'a'));
  CHECK(status == 400);
  CHECK(error_code(body) == "input_too_long");

  std::tie(status, body) = live.post("/ask", {{"q", "x"}});
  CHECK(status == 400);
  CHECK(error_code(body) == "invalid_request");

  auto res = live.client.Post("/ask", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);

  std::tie(status, body) = live.post("/ask", {{"question", "x"}, {"lang", "fr"}});
  CHECK(status == 400);
}

TEST_CASE("all tiers disabled leaves non-rule questions unresolved") {
  Live live;
  live.engine->set_ablation({.rule = true, .embedding = true, .llm = true, .adapt = false});
  const auto embeds = live.engine->embedder().call_count();
  const auto [status, body] = live.ask("Name funds sitting in both Wanke and Moutai cap tables.");
  CHECK(status == 400);
  CHECK(error_code(body) == "unresolved_intent");
  CHECK(live.engine->llm().call_count() == 0);
  CHECK(live.engine->embedder().call_count() == embeds);
}

TEST_CASE("the feedback flow teaches a new phrasing") {
  Live live;
  const std::string q = "Which city hosts the old head office of Gree?";
  auto [status, body] = live.ask(q);
  REQUIRE(status == 200);
  CHECK(body["answer"]["recognition"]["label"] != "former_hq_location");
  const std::string sid = body["session_id"];

  // Out of order: intent before cause.
  std::tie(status, body) = live.feedback(sid, "intent", "former_hq_location");
  CHECK(status == 409);
  CHECK(error_code(body) == "wrong_state");

  std::tie(status, body) = live.feedback(sid, "satisfied", false);
  REQUIRE(status == 200);
  CHECK(body["state"] == "ClarifyCause");
  std::tie(status, body) = live.feedback(sid, "cause", "intent");
  REQUIRE(status == 200);
  CHECK(body["state"] == "ElicitIntent");
  std::tie(status, body) = live.feedback(sid, "intent", "former_hq_location");
  REQUIRE(status == 200);
  CHECK(body["state"] == "Closed");
  CHECK(body["stored_label"] == "former_hq_location");
  CHECK(body["confirmation"].get<std::string>().find("former_hq_location") != std::string::npos);

  const auto llm_before = live.engine->llm().call_count();
  std::tie(status, body) = live.post("/ask", {{"question", q}, {"session_id", sid}});
  REQUIRE(status == 200);
  CHECK(body["answer"]["recognition"]["method"] == "embedding");
  CHECK(body["answer"]["recognition"]["label"] == "former_hq_location");
  CHECK(body["answer"]["rows"].dump().find("Guangzhou") != std::string::npos);
  // The answer renderer may use the LLM; recognition must not.
  CHECK(live.engine->llm().call_count(PromptTemplateId::kIntentFallback) == 0);
  CHECK(live.engine->llm().call_count() - llm_before <= 1);

  std::tie(status, body) = live.get("/intents");
  bool listed = false;
  for (const auto& i : body["intents"]) {
    if (i["label"] == "former_hq_location") listed = i["example_count"] == 2;
  }
  CHECK(listed);
}

TEST_CASE("feedback errors") {
  Live live;
  auto [status, body] = live.feedback("no-such-session", "satisfied", true);
  CHECK(status == 404);
  CHECK(error_code(body) == "not_found");

  std::tie(status, body) = live.ask("Where is the headquarters of Wanke company located?");
  const std::string sid = body["session_id"];
  std::tie(status, body) = live.feedback(sid, "satisfied", "perhaps");
  CHECK(status == 400);
  std::tie(status, body) = live.feedback(sid, "mood", true);
  CHECK(status == 400);
  std::tie(status, body) = live.feedback(sid, "satisfied", true);
  CHECK(status == 200);
  CHECK(body["state"] == "Closed");

  live.engine->set_ablation({.adapt = true});
  std::tie(status, body) = live.ask("Where is the headquarters of Wanke company located?");
  std::tie(status, body) = live.feedback(body["session_id"], "satisfied", false);
  CHECK(status == 409);
}

TEST_CASE("POST /ingest requires the token and reports per-line results") {
  Live live;
  const std::string csv = "acme,located,Zhuhai,string\nacme,type,Company,string\nacme,name,acme,string\nbroken,row\n";
  auto res = live.client.Post("/ingest/triples?filename=t.csv", csv, "text/csv");
  REQUIRE(res);
  CHECK(res->status == 401);

  httplib::Headers auth = {{"Authorization", "Bearer wrong"}};
  res = live.client.Post("/ingest/triples?filename=t.csv", auth, csv, "text/csv");
  REQUIRE(res);
  CHECK(res->status == 401);

  auth = {{"Authorization", "Bearer secret"}};
  const auto before = live.engine->store().size();
  httplib::MultipartFormDataItems items = {{"file", csv, "extra.csv", "text/csv"}};
  res = live.client.Post("/ingest/triples", auth, items);
  REQUIRE(res);
  REQUIRE(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body["loaded"] == 3);
  CHECK(body["rejected"] == 1);
  CHECK(body["errors"][0]["line"] == 4);
  CHECK(live.engine->store().size() == before + 3);

  // New entities are answerable immediately.
  auto [status, answer] = live.ask("Where is the headquarters of Acme located?");
  CHECK(status == 200);
  CHECK(answer.dump().find("Zhuhai") != std::string::npos);

  items = {{"file", csv, "extra.xml", "text/xml"}};
  res = live.client.Post("/ingest/triples", auth, items);
  REQUIRE(res);
  CHECK(res->status == 415);
  CHECK(error_code(json::parse(res->body)) == "unsupported_format");

  items = {{"file", "{}", "s.csv", "text/csv"}};
  res = live.client.Post("/ingest/seeds", auth, items);
  REQUIRE(res);
  CHECK(res->status == 415);

  res = live.client.Post("/ingest/widgets", auth, items);
  REQUIRE(res);
  CHECK(res->status == 400);

  const std::string seeds = R"({"label":"hq_location","examples":["where does the firm reside"]})"
                            "\n";
  items = {{"file", seeds, "s.jsonl", "application/jsonl"}};
  res = live.client.Post("/ingest/seeds", auth, items);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["added"] == 1);
}

TEST_CASE("GET /intents lists the seeded labels") {
  Live live;
  const auto [status, body] = live.get("/intents");
  REQUIRE(status == 200);
  std::map<std::string, std::size_t> seeded = live.engine->intent_counts();
  REQUIRE(body["intents"].size() == seeded.size());
  for (const auto& i : body["intents"]) CHECK(seeded.at(i["label"]) == i["example_count"].get<std::size_t>());
}

TEST_CASE("GET /healthz reports provider reachability") {
  Live live;
  auto [status, body] = live.get("/healthz");
  REQUIRE(status == 200);
  CHECK(body["status"] == "ok");
  CHECK(body["providers"]["embedder"]["status"] == "ok");

  auto offline = bundled_config(KBQA_DATA_DIR);
  offline.embedding_provider = "remote";
  offline.embedding_url = "http://127.0.0.1:1/embed";
  offline.llm_provider = "remote";
  offline.llm_url = "http://127.0.0.1:1/llm";
  offline.provider_timeout_seconds = 0.5;
  auto engine = Engine::from_config(offline);
  const auto h = engine->health();
  CHECK(h.status == "degraded");
  CHECK(h.embedder.status == "unreachable");
  CHECK(h.llm.status == "unreachable");
}

TEST_CASE("error mapping covers every engine error") {
  CHECK(to_api_error(Error(Errc::kUnresolvedIntent, "x", {{"cause", "provider_unavailable"}})).http_status == 503);
  CHECK(to_api_error(Error(Errc::kUnresolvedIntent, "x", {{"cause", "below_threshold"}})).http_status == 400);
  CHECK(to_api_error(Error(Errc::kNoTemplateForIntent, "x")).code == "no_template");
  CHECK(to_api_error(Error(Errc::kArityMismatch, "x")).code == "arity_mismatch");
  CHECK(to_api_error(Error(Errc::kWrongState, "x")).http_status == 409);
  CHECK(to_api_error(Error(Errc::kInternal, "x")).http_status == 500);
  const auto j = api_error_json(to_api_error(Error(Errc::kArityMismatch, "need 2", {{"expected", "2"}})));
  CHECK(j["error"]["detail"]["expected"] == "2");
  CHECK(j["error"]["message"] == "need 2");
}

TEST_CASE("concurrent sessions stay isolated") {
  Live live;
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", live.port);
      auto res = c.Post("/ask", json{{"question", "Where is the headquarters of Wanke company located?"}}.dump(),
                        "application/json");
      if (!res || res->status != 200) return;
      const std::string sid = json::parse(res->body)["session_id"];
      const bool happy = t % 2 == 0;
      res = c.Post("/feedback", json{{"session_id", sid}, {"step", "satisfied"}, {"value", happy}}.dump(),
                   "application/json");
      if (!res || res->status != 200) return;
      const std::string expect = happy ? "Closed" : "ClarifyCause";
      if (json::parse(res->body)["state"] == expect) ++ok;
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok == 8);
}
