#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kbqa/error.hpp"
#include "kbqa/ingest.hpp"

using namespace kbqa;
using namespace kbqa::graph;
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

Cleaner plain_cleaner() {
  return [](const RawQuestion& q) { return clean(q, StopwordList{"the", "is"}); };
}

void check_balanced(const IngestReport& r, std::size_t records) {
  CHECK(r.loaded + r.rejected == records);
  CHECK(r.errors.size() == r.rejected);
}

}  // namespace

TEST_CASE("CSV follows RFC 4180 quoting and keeps record line numbers") {
  const auto recs = parse_csv("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\nlast,\n");
  REQUIRE(recs.size() == 4);
  CHECK(recs[0].fields == std::vector<std::string>{"a", "b"});
  CHECK(recs[1].fields == std::vector<std::string>{"x, y", "say \"hi\""});
  CHECK(recs[2].fields == std::vector<std::string>{"multi\nline", "z"});
  CHECK(recs[2].line == 3);
  CHECK(recs[3].line == 5);
  CHECK(recs[3].fields == std::vector<std::string>{"last", ""});
}

TEST_CASE("CSV triples: header, types and per-line rejections") {
  std::istringstream in(
      "subject,predicate,object,object_type\n"
      "wanke,located,Shenzhen,string\n"
      "wanke,founded,1984,number\n"
      "wanke,invested_by,hillhouse,entity\n"
      "wanke,founded,nineteen,number\n"
      "wanke,odd,x,colour\n"
      "too,few,fields\n"
      ",p,x,string\n"
      "wanke,located,Shenzhen,string\n"
      "bad,\xff\xfe,x,string\n");
  TripleStore store;
  const auto r = load_triples(in, TripleFormat::kCsv, store);
  check_balanced(r, 9);
  CHECK(r.loaded == 4);
  CHECK(r.added == 3);
  CHECK(store.size() == 3);
  REQUIRE(r.errors.size() == 5);
  CHECK(r.errors[0].line == 5);
  CHECK(r.errors[0].reason.find("invalid number") != std::string::npos);
  CHECK(r.errors[1].reason.find("unknown object_type 'colour'") != std::string::npos);
  CHECK(r.errors[2].reason.find("expected 4 fields") != std::string::npos);
  CHECK(r.errors[4].reason == "invalid UTF-8");
  CHECK(store.snapshot()->contains({"wanke", "founded", Value::number(1984)}));
  CHECK(store.snapshot()->contains({"wanke", "invested_by", Value::entity("hillhouse")}));
}

TEST_CASE("JSONL triples") {
  std::istringstream in(
      R"({"s":"a","p":"n","o":3.5,"t":"number"})"
      "\n"
      R"({"s":"a","p":"n","o":"4","t":"number"})"
      "\n"
      R"({"s":"a","p":"r","o":"b","t":"entity"})"
      "\n"
      "{oops\n"
      R"({"s":"a","p":"r"})"
      "\n");
  TripleStore store;
  const auto r = load_triples(in, TripleFormat::kJsonl, store);
  check_balanced(r, 5);
  CHECK(r.loaded == 3);
  CHECK(store.snapshot()->contains({"a", "n", Value::number(4)}));
}

TEST_CASE("format detection") {
  CHECK(triple_format_for("x.csv") == TripleFormat::kCsv);
  CHECK(triple_format_for("dir/x.JSONL") == TripleFormat::kJsonl);
  CHECK(code_of([] { triple_format_for("x.xml"); }) == Errc::kUnknownFormat);
  CHECK(code_of([] { require_jsonl("x.csv"); }) == Errc::kUnknownFormat);
  CHECK_NOTHROW(require_jsonl("x.jsonl"));
  CHECK(parse_ingest_kind("templates") == IngestKind::kTemplates);
  CHECK(code_of([] { parse_ingest_kind("blobs"); }) == Errc::kInvalidArgument);
  CHECK(ingest_kind_name(IngestKind::kSeeds) == "seeds");
}

TEST_CASE("missing files are unreadable") {
  TripleStore store;
  CHECK(code_of([&] { load_triples(fs::path("/nonexistent/t.csv"), store); }) == Errc::kFileUnreadable);
}

TEST_CASE("seeds are cleaned, embedded and idempotent") {
  const std::string text =
      R"({"label":"hq_location","examples":["Where is the HQ?","the hq city"]})"
      "\n"
      R"({"label":"Bad Label","examples":["x"]})"
      "\n"
      R"({"label":"ok","examples":[]})"
      "\n"
      R"({"label":"ok","examples":["fine","?!"]})"
      "\n"
      R"({"label":"zh_hq","examples":["总部在哪"],"lang":"zh"})"
      "\n";
  IntentBase base;
  MockEmbedder emb;
  std::istringstream in(text);
  auto r = load_intent_seeds(in, base, emb, plain_cleaner());
  check_balanced(r, 5);
  CHECK(r.loaded == 2);
  CHECK(r.added == 3);
  CHECK(base.size() == 3);
  // Stored text is the cleaned form.
  const auto snap = base.snapshot();
  CHECK(snap[0].example_text == "where hq");
  CHECK(snap[0].vector == mock_embed("where hq"));
  // The half-valid record stored nothing.
  CHECK_FALSE(base.has_label("ok"));

  const auto fp = base.fingerprint();
  std::istringstream again(text);
  r = load_intent_seeds(again, base, emb, plain_cleaner());
  CHECK(r.added == 0);
  CHECK(base.fingerprint() == fp);
}

TEST_CASE("templates: last wins, overrides are noted, bad ones rejected") {
  std::istringstream in(
      R"({"intent":"hq","cql":"MATCH (c {name:XX})-[:located]->(x) RETURN x","arity":1})"
      "\n"
      R"({"intent":"hq","cql":"MATCH (c {name:XX})-[:hq]->(x) RETURN x","arity":1})"
      "\n"
      R"({"intent":"bad","cql":"MATCH (c {name:XX}) RETURN c","arity":2})"
      "\n"
      R"({"intent":"worse","cql":"MATCH (c RETURN c","arity":0})"
      "\n"
      R"({"intent":"neg","cql":"MATCH (c) RETURN c","arity":-1})"
      "\n");
  TemplateLibrary lib;
  const auto r = load_templates(in, lib);
  check_balanced(r, 5);
  CHECK(r.loaded == 2);
  CHECK(lib.size() == 1);
  CHECK(lib.find("hq")->cql_text.find(":hq]") != std::string::npos);
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("replaces line 1") != std::string::npos);
}

TEST_CASE("rules append in order without duplicates") {
  const std::string text =
      R"({"label":"a","keyword_groups":[["x"],["y","z"]],"pattern":null})"
      "\n"
      R"({"label":"b","keyword_groups":[],"pattern":"^q"})"
      "\n"
      R"({"label":"c","keyword_groups":[],"pattern":null})"
      "\n"
      R"({"label":"d","keyword_groups":[["x"]],"pattern":"("})"
      "\n";
  std::vector<IntentRule> rules;
  std::istringstream in(text);
  auto r = load_rules(in, rules);
  check_balanced(r, 4);
  CHECK(rules.size() == 2);
  CHECK(rules[0].label() == "a");
  CHECK(rules[1].label() == "b");
  std::istringstream again(text);
  r = load_rules(again, rules);
  CHECK(r.added == 0);
  CHECK(rules.size() == 2);
}

TEST_CASE("bundled data files load cleanly") {
  const fs::path data = KBQA_DATA_DIR;
  TripleStore store;
  auto r = load_triples(data / "triples.csv", store);
  CHECK(r.rejected == 0);
  CHECK(r.added == store.size());
  CHECK(store.snapshot()->contains({"wanke", "located", Value::string("Shenzhen")}));

  TemplateLibrary lib;
  r = load_templates(data / "templates.jsonl", lib);
  CHECK(r.rejected == 0);
  CHECK(r.notes.empty());

  std::vector<IntentRule> rules;
  r = load_rules(data / "rules.jsonl", rules);
  CHECK(r.rejected == 0);

  const auto stop = load_stoplist(data / "stopwords_en.txt");
  IntentBase base;
  MockEmbedder emb;
  r = load_intent_seeds(data / "seeds.jsonl", base, emb, [&](const RawQuestion& q) { return clean(q, stop); });
  CHECK(r.rejected == 0);
  CHECK(base.size() > 0);
  // Every labelled rule and seed has a template to answer with.
  for (const auto& rule : rules) CHECK(lib.find(rule.label()));
  for (const auto& [label, n] : base.label_counts()) CHECK(lib.find(label));
}
