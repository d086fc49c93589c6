#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "kbqa/config.hpp"
#include "kbqa/engine.hpp"
#include "kbqa/error.hpp"

using namespace kbqa;
namespace fs = std::filesystem;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInternal;
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

ServiceConfig parse(const std::string& text, const EnvLookup& env = env_of({})) {
  std::istringstream in(text);
  return parse_config(in, "/base", env);
}

}  // namespace

TEST_CASE("flat key = value with comments and defaults") {
  const auto c = parse(
      "# comment\n"
      "\n"
      "  tau = 0.65  \n"
      "listen_port=9000\n"
      "allow_new_labels = off\n"
      "triples = kg/t.csv\n"
      "seeds = /abs/seeds.jsonl\n"
      "llm_provider = disabled\n");
  CHECK(c.tau == 0.65);
  CHECK(c.listen_port == 9000);
  CHECK_FALSE(c.allow_new_labels);
  CHECK(c.triples == fs::path("/base/kg/t.csv"));
  CHECK(c.seeds == fs::path("/abs/seeds.jsonl"));
  CHECK(c.llm_provider == "disabled");
  CHECK(c.embedding_provider == "mock");
  CHECK(c.embedding_dim == 256);
  CHECK(c.rules.empty());
}

TEST_CASE("malformed input is a ConfigError") {
  CHECK(code_of([] { parse("no_such_key = 1\n"); }) == Errc::kConfigError);
  CHECK(code_of([] { parse("tau\n"); }) == Errc::kConfigError);
  CHECK(code_of([] { parse("tau = high\n"); }) == Errc::kConfigError);
  CHECK(code_of([] { parse("tau = 0.5x\n"); }) == Errc::kConfigError);
  CHECK(code_of([] { parse("listen_port = 70000\n"); }) == Errc::kConfigError);
  CHECK(code_of([] { parse("embedding_dim = 0\n"); }) == Errc::kConfigError);
  CHECK(code_of([] { parse("disable_rule = maybe\n"); }) == Errc::kConfigError);
}

TEST_CASE("environment overrides file values") {
  const auto c = parse("tau = 0.5\nlisten_port = 1\n",
                       env_of({{"LBKBQA_TAU", "0.9"}, {"LBKBQA_DISABLE_LLM", "true"}, {"KBQA_TAU", "0.1"}}));
  CHECK(c.tau == 0.9);
  CHECK(c.disable_llm);
  CHECK(c.listen_port == 1);
  CHECK(code_of([] { parse("", env_of({{"LBKBQA_LISTEN_PORT", "-1"}})); }) == Errc::kConfigError);
}

TEST_CASE("validate checks ranges, providers and paths") {
  const auto ok = [] {
    ServiceConfig c;
    c.llm_provider = "disabled";
    return c;
  };
  CHECK_NOTHROW(ok().validate());
  auto c = ok();
  c.tau = 1.01;
  CHECK(code_of([&] { c.validate(); }) == Errc::kConfigError);
  c = ok();
  c.provider_timeout_seconds = 0;
  CHECK(code_of([&] { c.validate(); }) == Errc::kConfigError);
  c = ok();
  c.embedding_provider = "remote";
  CHECK(code_of([&] { c.validate(); }) == Errc::kConfigError);
  c.embedding_url = "http://127.0.0.1:1/embed";
  CHECK_NOTHROW(c.validate());
  c = ok();
  c.llm_provider = "gpt";
  CHECK(code_of([&] { c.validate(); }) == Errc::kConfigError);
  c = ok();
  c.triples = "/nonexistent/t.csv";
  CHECK(code_of([&] { c.validate(); }) == Errc::kConfigError);
}

TEST_CASE("the bundled config file resolves against its directory") {
  const fs::path data = KBQA_DATA_DIR;
  const auto c = load_config(data / "kbqa.conf", env_of({}));
  CHECK(fs::equivalent(c.triples, data / "triples.csv"));
  CHECK(fs::equivalent(c.prompts_dir, data / "prompts"));
  CHECK(c.tau == 0.80);
  CHECK(c.llm_provider == "scripted");
  CHECK(code_of([] { load_config("/nonexistent/kbqa.conf", env_of({})); }) == Errc::kConfigError);

  const auto b = bundled_config(data);
  CHECK(fs::equivalent(b.triples, c.triples));
  CHECK(fs::equivalent(b.seeds, c.seeds));
  CHECK_NOTHROW(b.validate());
}

TEST_CASE("an engine built from the bundled config loads every file cleanly") {
  const auto engine = Engine::from_config(bundled_config(KBQA_DATA_DIR));
  CHECK(engine->store().size() > 0);
  CHECK(engine->intent_base().size() > 0);
  CHECK(engine->templates().size() > 0);
  CHECK(engine->rules()->size() > 0);
  for (const auto& [kind, report] : engine->startup_reports()) {
    INFO(kind);
    CHECK(report.rejected == 0);
  }
  CHECK(engine->health().status == "ok");
  const auto r = engine->ask({"Where is the headquarters of Wanke company located?", Lang::kEn});
  REQUIRE(r.payload.rows.size() == 1);
  CHECK(r.payload.rows[0].values[0].second == graph::Value::string("Shenzhen"));
}
