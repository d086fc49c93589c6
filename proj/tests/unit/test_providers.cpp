#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kbqa/error.hpp"
#include "kbqa/intent.hpp"
#include "kbqa/preprocess.hpp"
#include "kbqa/providers.hpp"
#include "support/oracles.hpp"

using namespace kbqa;
using namespace std::chrono_literals;

namespace {

constexpr std::uint64_t kBasis = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kSignBasis = 0x9e3779b97f4a7c15ULL;

// Hand-rolled reference for the signed feature hash.
std::vector<double> reference_embed(const std::string& text, std::size_t dim) {
  std::vector<double> acc(dim, 0.0);
  for (const auto& t : tokenize(text)) {
    const double sign = oracle::fnv1a(t, kSignBasis) % 2 == 0 ? 1.0 : -1.0;
    acc[oracle::fnv1a(t, kBasis) % dim] += sign;
  }
  double norm = 0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : acc) v /= norm;
  return acc;
}

double norm_of(const EmbeddingVector& v) {
  double s = 0;
  for (double x : v.values()) s += x * x;
  return std::sqrt(s);
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInternal;
}

struct FakeServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  FakeServer() = default;
  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port) + path; }
};

int closed_port() {
  httplib::Server s;
  return s.bind_to_any_port("127.0.0.1");  // released when s goes away
}

}  // namespace

TEST_CASE("FNV hashes match a byte-by-byte reference") {
  for (const char* t : {"", "a", "wanke", "headquarters", "\xe4\xb8\x87\xe7\xa7\x91"}) {
    CHECK(mock_index_hash(t) == oracle::fnv1a(t, kBasis));
    CHECK(mock_sign_hash(t) == oracle::fnv1a(t, kSignBasis));
  }
  CHECK(mock_index_hash("a") == 0xaf63dc4c8601ec8cULL);  // published FNV-1a test vector
}

TEST_CASE("mock embedding equals the reference computation") {
  for (const char* text : {"wanke headquarters location", "Who is the chairman of Pingan?", "a a b", "x"}) {
    const auto got = mock_embed(text);
    const auto want = reference_embed(text, kDefaultEmbeddingDim);
    REQUIRE(got.dim() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got.values()[i] == doctest::Approx(want[i]).epsilon(1e-15));
  }
}

TEST_CASE("mock embedding contracts") {
  const auto a = mock_embed("wanke headquarters location");
  CHECK(a == mock_embed("wanke headquarters location"));
  CHECK(std::abs(norm_of(a) - 1.0) < 1e-9);

  const auto single = mock_embed("token");
  int nonzero = 0;
  for (double x : single.values()) {
    if (x != 0) {
      ++nonzero;
      CHECK(std::abs(x) == 1.0);
    }
  }
  CHECK(nonzero == 1);
  CHECK(cosine(mock_embed("a a"), mock_embed("a")) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine(mock_embed("a b"), mock_embed("b a")) == 1.0);
  CHECK(cosine(a, mock_embed("location of wanke headquarters")) > cosine(a, mock_embed("chairman of pingan")));
  CHECK(mock_embed("x", 16).dim() == 16);
  CHECK(code_of([] { mock_embed(""); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { mock_embed("?!"); }) == Errc::kInvalidArgument);
}

TEST_CASE("embedder counts calls") {
  MockEmbedder e;
  e.embed("one");
  e.embed("two");
  CHECK(e.call_count() == 2);
  CHECK(e.id() == "mock-embedder");
}

TEST_CASE("normalized vectors reject degenerate input") {
  CHECK(code_of([] { EmbeddingVector::normalized({}); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { EmbeddingVector::normalized({0.0, 0.0}); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { EmbeddingVector::normalized({NAN, 1.0}); }) == Errc::kInvalidArgument);
  const auto v = EmbeddingVector::normalized({3.0, 4.0});
  CHECK(v.values()[0] == doctest::Approx(0.6));
}

TEST_CASE("prompt slots render and missing slots are rejected") {
  CHECK(render_slots("Q: {{question}} / {{question}}", {{"question", "x"}}) == "Q: x / x");
  CHECK(code_of([] { render_slots("{{a}} {{b}}", {{"a", "1"}}); }) == Errc::kInvalidArgument);
  CHECK(template_slots("{{a}} {{b}} {{a}}") == std::vector<std::string>{"a", "b"});
  const auto lib = PromptLibrary::builtin();
  for (auto id : {PromptTemplateId::kIntentFallback, PromptTemplateId::kAnswerRender, PromptTemplateId::kClarifyCause,
                  PromptTemplateId::kElicitIntent}) {
    CHECK_FALSE(lib.text(id).empty());
    CHECK(parse_template_id(template_name(id)) == id);
  }
  CHECK(code_of([] { parse_template_id("nope"); }) == Errc::kInvalidArgument);
}

TEST_CASE("bundled prompt files match the builtin texts") {
  const auto dir = PromptLibrary::load_dir(KBQA_DATA_DIR "/prompts");
  const auto builtin = PromptLibrary::builtin();
  for (auto id : {PromptTemplateId::kIntentFallback, PromptTemplateId::kAnswerRender, PromptTemplateId::kClarifyCause,
                  PromptTemplateId::kElicitIntent}) {
    CHECK(dir.text(id) == builtin.text(id));
  }
}

TEST_CASE("scripted LLM replies by match, then by template default") {
  ScriptedLlm llm(nullptr);
  llm.add({PromptTemplateId::kIntentFallback, {{"question", "q17"}}, "thinking\nintent: stock_price"});
  PromptRequest req{PromptTemplateId::kIntentFallback,
                    {{"question", "q17"}, {"intents", "a, b"}, {"demonstration", "demo"}}};
  CHECK(llm.complete(req).text == "thinking\nintent: stock_price");
  req.variables["question"] = "other";
  CHECK(llm.complete(req).text.find("intent:") == std::string::npos);

  PromptRequest render{PromptTemplateId::kAnswerRender, {{"question", "q"}, {"knowledge", "x=Shenzhen"}}};
  CHECK(llm.complete(render).text == "x=Shenzhen");
  CHECK(llm.call_count() == 3);
  CHECK(llm.call_count(PromptTemplateId::kAnswerRender) == 1);

  // A request missing a slot the template needs never reaches the backend.
  CHECK(code_of([&] { llm.complete({PromptTemplateId::kAnswerRender, {{"question", "q"}}}); }) ==
        Errc::kInvalidArgument);
  CHECK(llm.call_count() == 3);
}

TEST_CASE("scripted LLM loads JSON Lines") {
  const auto path = std::filesystem::temp_directory_path() / "kbqa_script_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"template":"intent_fallback","match":{"question":"a"},"reply":"intent: x"})" << "\n\n"
        << R"({"template":"answer_render","default":"said {{knowledge}}"})" << "\n";
  }
  auto llm = ScriptedLlm::load(path, nullptr);
  CHECK(llm->complete({PromptTemplateId::kIntentFallback, {{"question", "a"}, {"intents", ""}, {"demonstration", ""}}})
            .text == "intent: x");
  CHECK(llm->complete({PromptTemplateId::kAnswerRender, {{"question", ""}, {"knowledge", "k"}}}).text == "said k");
  {
    std::ofstream out(path);
    out << "{not json\n";
  }
  CHECK(code_of([&] { ScriptedLlm::load(path, nullptr); }) == Errc::kMalformedLine);
  std::filesystem::remove(path);
  CHECK(code_of([&] { ScriptedLlm::load(path, nullptr); }) == Errc::kFileUnreadable);
}

TEST_CASE("disabled LLM is unavailable") {
  DisabledLlm llm(nullptr);
  CHECK_FALSE(llm.reachable(10ms));
  CHECK(code_of([&] {
          llm.complete({PromptTemplateId::kAnswerRender, {{"question", ""}, {"knowledge", ""}}});
        }) == Errc::kProviderUnavailable);
}

TEST_CASE("remote providers speak the JSON contract") {
  FakeServer fake;
  std::string last_prompt;
  fake.server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto text = body.at("text").get<std::string>();
    std::vector<double> v(4, 0.0);
    v[text.size() % 4] = 2.0;
    res.set_content(nlohmann::json{{"vector", v}}.dump(), "application/json");
  });
  fake.server.Post("/short", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vector":[1,2]})", "application/json");
  });
  fake.server.Post("/llm", [&](const httplib::Request& req, httplib::Response& res) {
    last_prompt = nlohmann::json::parse(req.body).at("prompt").get<std::string>();
    res.set_content(R"({"text":"intent: hq_location"})", "application/json");
  });
  fake.server.Post("/boom", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  fake.start();

  RemoteEmbedder emb({fake.url("/embed"), 1000ms}, 4);
  const auto v = emb.embed("abc");
  CHECK(v.values()[3] == 1.0);
  CHECK(emb.reachable(300ms));

  RemoteEmbedder wrong_dim({fake.url("/short"), 1000ms}, 4);
  CHECK(code_of([&] { wrong_dim.embed("abc"); }) == Errc::kProviderUnavailable);

  RemoteLlm llm({fake.url("/llm"), 1000ms}, nullptr);
  const auto reply = llm.complete({PromptTemplateId::kAnswerRender, {{"question", "Q?"}, {"knowledge", "K"}}});
  CHECK(reply.text == "intent: hq_location");
  CHECK(last_prompt.find("Q?") != std::string::npos);

  RemoteLlm failing({fake.url("/boom"), 1000ms}, nullptr);
  CHECK(code_of([&] {
          failing.complete({PromptTemplateId::kAnswerRender, {{"question", ""}, {"knowledge", ""}}});
        }) == Errc::kProviderUnavailable);
}

TEST_CASE("unreachable remote providers fail fast with ProviderUnavailable") {
  const int port = closed_port();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  RemoteEmbedder emb({base + "/embed", 500ms}, 8);
  RemoteLlm llm({base + "/llm", 500ms}, nullptr);
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(code_of([&] { emb.embed("x"); }) == Errc::kProviderUnavailable);
  CHECK(code_of([&] {
          llm.complete({PromptTemplateId::kAnswerRender, {{"question", ""}, {"knowledge", ""}}});
        }) == Errc::kProviderUnavailable);
  CHECK_FALSE(emb.reachable(200ms));
  CHECK(std::chrono::steady_clock::now() - t0 < 2s);
}

TEST_CASE("slow providers time out and deadlines cap the wait") {
  FakeServer fake;
  fake.server.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(1500ms);
    res.set_content(R"({"vector":[1]})", "application/json");
  });
  fake.start();
  RemoteEmbedder emb({fake.url("/slow"), 300ms}, 1);
  auto t0 = std::chrono::steady_clock::now();
  CHECK(code_of([&] { emb.embed("x"); }) == Errc::kProviderUnavailable);
  CHECK(std::chrono::steady_clock::now() - t0 < 1200ms);

  RemoteEmbedder patient({fake.url("/slow"), 5000ms}, 1);
  t0 = std::chrono::steady_clock::now();
  {
    DeadlineScope scope(std::chrono::steady_clock::now() + 300ms);
    CHECK(code_of([&] { patient.embed("x"); }) == Errc::kProviderUnavailable);
  }
  CHECK(std::chrono::steady_clock::now() - t0 < 1200ms);
  CHECK_FALSE(current_deadline());
  {
    DeadlineScope expired(std::chrono::steady_clock::now() - 1ms);
    CHECK(code_of([&] { patient.embed("x"); }) == Errc::kProviderUnavailable);
  }
}

TEST_CASE("provider urls need a scheme") {
  CHECK(code_of([] { RemoteEmbedder e({"localhost:9/embed", 100ms}, 4); }) == Errc::kConfigError);
}
