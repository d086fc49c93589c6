#include <doctest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "kbqa/error.hpp"
#include "kbqa/intent.hpp"

using namespace kbqa;

namespace {

CleanQuestion cq(const std::string& text) { return clean({text, Lang::kEn}, StopwordList{}); }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInternal;
}

std::string cause_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.detail().count("cause") ? e.detail().at("cause") : "";
  }
  return "none";
}

EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> d;
  std::vector<double> v(dim);
  for (auto& x : v) x = d(rng);
  return EmbeddingVector::normalized(v);
}

}  // namespace

TEST_CASE("rules need every group and the optional pattern") {
  IntentRule hq("hq_location", {{"headquarters"}, {"located", "location"}});
  CHECK(hq.matches(cq("headquarters wanke located")));
  CHECK_FALSE(hq.matches(cq("headquarters wanke")));
  IntentRule code("stock_code", {{"code"}}, "^what\\b");
  CHECK(code.matches(cq("what code")));
  CHECK_FALSE(code.matches(cq("the code what")));
  IntentRule pattern_only("p", {}, "price");
  CHECK(pattern_only.matches(cq("share price today")));

  CHECK(code_of([] { IntentRule("", {{"a"}}); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { IntentRule("x", {}); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { IntentRule("x", {{}}); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { IntentRule("x", {{"a"}}, "("); }) == Errc::kInvalidArgument);
}

TEST_CASE("first matching rule in order wins") {
  std::vector<IntentRule> rules = {IntentRule("first", {{"a"}}), IntentRule("second", {{"a"}, {"b"}})};
  CHECK(match_rules(cq("a b"), rules) == "first");
  CHECK_FALSE(match_rules(cq("c"), rules));
  CHECK_FALSE(match_rules(cq("a"), std::vector<IntentRule>{}));
}

TEST_CASE("cosine equals an independent summation") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_unit(rng, 64);
    const auto b = random_unit(rng, 64);
    long double sum = 0;
    for (std::size_t k = 0; k < 64; ++k) sum += static_cast<long double>(a.values()[k]) * b.values()[k];
    CHECK(std::abs(cosine(a, b) - static_cast<double>(sum)) < 1e-12);
  }
  const auto v = random_unit(rng, 8);
  std::vector<double> neg(v.values().begin(), v.values().end());
  for (auto& x : neg) x = -x;
  CHECK(cosine(v, v) == 1.0);
  CHECK(cosine(v, EmbeddingVector::normalized(neg)) == -1.0);
  CHECK(code_of([&] { cosine(v, random_unit(rng, 9)); }) == Errc::kDimensionMismatch);
}

TEST_CASE("nearest intent equals an exhaustive scan with the stated tie-break") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> labels = {"a", "b", "c", "d"};
  for (int round = 0; round < 200; ++round) {
    // A tiny dimension forces exact ties between distinct records.
    const std::size_t dim = 3;
    std::vector<IntentRecord> records;
    const int n = 1 + static_cast<int>(rng() % 10);
    std::vector<EmbeddingVector> pool;
    for (int k = 0; k < 3; ++k) pool.push_back(random_unit(rng, dim));
    for (int k = 0; k < n; ++k) {
      records.push_back({labels[rng() % labels.size()], "q" + std::to_string(k), pool[rng() % pool.size()],
                         static_cast<std::uint64_t>(k + 1)});
    }
    const auto v = rng() % 2 ? pool[rng() % pool.size()] : random_unit(rng, dim);
    std::size_t best = 0;
    for (std::size_t k = 1; k < records.size(); ++k) {
      double sk = 0;
      double sb = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        sk += records[k].vector.values()[i] * v.values()[i];
        sb += records[best].vector.values()[i] * v.values()[i];
      }
      if (sk > sb || (sk == sb && (records[k].label < records[best].label ||
                                   (records[k].label == records[best].label &&
                                    records[k].inserted_at < records[best].inserted_at)))) {
        best = k;
      }
    }
    const auto got = nearest_intent(v, records);
    REQUIRE(got);
    CHECK(got->record.label == records[best].label);
    CHECK(got->record.inserted_at == records[best].inserted_at);
  }
  CHECK_FALSE(nearest_intent(mock_embed("x"), std::vector<IntentRecord>{}));
}

TEST_CASE("nearest intent is unchanged by positive rescaling of the query") {
  std::mt19937_64 rng(23);
  IntentBase base(16);
  for (int k = 0; k < 20; ++k) base.upsert("l" + std::to_string(k % 5), "q" + std::to_string(k), random_unit(rng, 16));
  for (int i = 0; i < 50; ++i) {
    const auto v = random_unit(rng, 16);
    std::vector<double> scaled(v.values().begin(), v.values().end());
    for (auto& x : scaled) x *= 7.5;
    CHECK(base.nearest(v)->record.example_text == base.nearest(EmbeddingVector::normalized(scaled))->record.example_text);
  }
}

TEST_CASE("intent base upsert keys on label and text") {
  IntentBase base;
  const auto v = mock_embed("where is hq");
  CHECK(base.upsert("hq", "where is hq", v));
  CHECK_FALSE(base.upsert("hq", "where is hq", v));
  CHECK(base.size() == 1);
  CHECK(base.upsert("other", "where is hq", v));
  CHECK(base.size() == 2);
  CHECK(base.nearest(v)->similarity == 1.0);
  CHECK(base.label_counts() == std::map<std::string, std::size_t>{{"hq", 1}, {"other", 1}});
  CHECK(base.has_label("hq"));
  CHECK(code_of([&] { base.upsert("x", "y", mock_embed("y", 8)); }) == Errc::kDimensionMismatch);
  CHECK(code_of([&] { base.nearest(mock_embed("y", 8)); }) == Errc::kDimensionMismatch);
  CHECK(code_of([&] { base.upsert("", "y", v); }) == Errc::kInvalidLabel);
}

TEST_CASE("snapshot, restore and fingerprint") {
  IntentBase base;
  base.upsert("a", "one", mock_embed("one"));
  const auto fp = base.fingerprint();
  const auto snap = base.snapshot();
  base.upsert("b", "two", mock_embed("two"));
  CHECK(base.fingerprint() != fp);
  base.restore(snap);
  CHECK(base.fingerprint() == fp);
  CHECK(base.size() == 1);
  base.clear();
  CHECK(base.size() == 0);
}

TEST_CASE("save and load round trip; mixed dimensions are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "kbqa_base_test.jsonl";
  IntentBase base;
  base.upsert("a", "one", mock_embed("one"));
  base.upsert("b", "two three", mock_embed("two three"));
  base.save_jsonl(path);
  IntentBase loaded;
  loaded.load_jsonl(path);
  CHECK(loaded.fingerprint() == base.fingerprint());
  IntentBase small(8);
  small.upsert("keep", "me", mock_embed("me", 8));
  CHECK(code_of([&] { small.load_jsonl(path); }) == Errc::kDimensionMismatch);
  CHECK(small.size() == 1);
  std::filesystem::remove(path);
}

TEST_CASE("labels slugify and replies parse") {
  CHECK(slugify_label("  Stock Price ") == "stock_price");
  CHECK(slugify_label("HQ-Location!") == "hq-location");
  CHECK(slugify_label("a__b  c") == "a_b_c");
  CHECK(slugify_label("?!").empty());
  CHECK(parse_intent_reply("reasoning...\nIntent: Stock Price\n") == "stock_price");
  CHECK(parse_intent_reply("  intent:hq_location") == "hq_location");
  CHECK_FALSE(parse_intent_reply("no label here"));
  CHECK_FALSE(parse_intent_reply("intent: ???"));
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(CascadeConfig{}.validate());
  CHECK(code_of([] { CascadeConfig{1.5}.validate(); }) == Errc::kConfigError);
  CHECK(code_of([] { CascadeConfig{-0.1}.validate(); }) == Errc::kConfigError);
}

// ---------------------------------------------------------------------------
// Cascade

namespace {

struct Fixture {
  std::vector<IntentRule> rules = {IntentRule("hq_location", {{"headquarters"}, {"located", "where"}})};
  MockEmbedder embedder;
  ScriptedLlm llm{nullptr};
  IntentBase base;
  CascadeConfig config;

  CascadeTiers tiers() { return {&rules, &embedder, &llm, {"ceo_of"}}; }
};

}  // namespace

TEST_CASE("rule hits never touch the embedder or the LLM") {
  Fixture f;
  f.base.upsert("other", "headquarters located", mock_embed("headquarters located"));
  const auto r = recognize(cq("where headquarters wanke"), f.base, f.config, f.tiers());
  CHECK(r.label == "hq_location");
  CHECK(r.method == RecognitionMethod::kRule);
  CHECK(r.score == 1.0);
  CHECK(f.embedder.call_count() == 0);
  CHECK(f.llm.call_count() == 0);
}

TEST_CASE("stored question resolves at the embedding tier") {
  Fixture f;
  f.base.upsert("chairman_of", "chairman wanke", mock_embed("chairman wanke"));
  const auto r = recognize(cq("chairman wanke"), f.base, f.config, f.tiers());
  CHECK(r.method == RecognitionMethod::kEmbedding);
  CHECK(r.label == "chairman_of");
  CHECK(r.score == 1.0);
  REQUIRE(r.matched_record);
  CHECK(r.matched_record->example_text == "chairman wanke");
  CHECK(f.llm.call_count() == 0);
}

TEST_CASE("LLM tier labels known and new intents and writes back") {
  Fixture f;
  f.llm.add({PromptTemplateId::kIntentFallback, {{"question", "boss gree"}}, "because\nintent: CEO of"});
  f.llm.add({PromptTemplateId::kIntentFallback, {{"question", "dividend wanke"}}, "intent: Dividend Policy"});
  auto r = recognize(cq("boss gree"), f.base, f.config, f.tiers());
  CHECK(r.method == RecognitionMethod::kLlm);
  CHECK(r.label == "ceo_of");
  CHECK_FALSE(r.is_new_intent);
  CHECK(f.base.size() == 1);

  r = recognize(cq("dividend wanke"), f.base, f.config, f.tiers());
  CHECK(r.label == "dividend_policy");
  CHECK(r.is_new_intent);
  CHECK(f.base.size() == 2);

  // The write-back makes the same question an embedding hit next time.
  const auto calls = f.llm.call_count();
  r = recognize(cq("boss gree"), f.base, f.config, f.tiers());
  CHECK(r.method == RecognitionMethod::kEmbedding);
  CHECK(f.llm.call_count() == calls);
}

TEST_CASE("the LLM prompt carries the question and the label inventory") {
  Fixture f;
  f.base.upsert("stored", "x y", mock_embed("x y"));
  f.llm.set_default(PromptTemplateId::kIntentFallback, "{{intents}}|{{question}}");
  CHECK(cause_of([&] { recognize(cq("nothing here"), f.base, f.config, f.tiers()); }) == "no_intent");
  // Inventory is checked through a reply that echoes it.
  f.llm.set_default(PromptTemplateId::kIntentFallback, "intent: {{intents}}");
  f.config.allow_new_labels = false;
  CHECK(cause_of([&] { recognize(cq("nothing here"), f.base, f.config, f.tiers()); }) == "new_label_rejected");
}

TEST_CASE("unresolved causes") {
  Fixture f;
  CHECK(cause_of([&] { recognize(cq("zzz"), f.base, f.config, {nullptr, nullptr, nullptr, {}}); }) == "declined");
  DisabledLlm down(nullptr);
  CHECK(cause_of([&] { recognize(cq("zzz"), f.base, f.config, {&f.rules, &f.embedder, &down, {}}); }) ==
        "provider_unavailable");
  f.llm.add({PromptTemplateId::kIntentFallback, {{"question", "zzz"}}, "intent: brand_new"});
  f.config.allow_new_labels = false;
  CHECK(cause_of([&] { recognize(cq("zzz"), f.base, f.config, f.tiers()); }) == "new_label_rejected");
  CHECK(f.base.size() == 0);
}

TEST_CASE("threshold monotonicity over tau") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
  auto sentence = [&] {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) s += vocab[rng() % vocab.size()] + " ";
    return s;
  };
  MockEmbedder emb;
  IntentBase base;
  for (int i = 0; i < 15; ++i) {
    const auto s = cq(sentence());
    base.upsert("l" + std::to_string(i % 4), s.text, emb.embed(s.text));
  }
  std::vector<CleanQuestion> questions;
  for (int i = 0; i < 200; ++i) questions.push_back(cq(sentence()));

  std::vector<std::set<std::size_t>> resolved;
  for (double tau : {0.0, 0.5, 0.8, 0.95, 1.0}) {
    std::set<std::size_t> at_embedding;
    for (std::size_t i = 0; i < questions.size(); ++i) {
      try {
        const auto r = recognize(questions[i], base, CascadeConfig{tau}, {nullptr, &emb, nullptr, {}});
        CHECK(r.score >= tau);
        at_embedding.insert(i);
      } catch (const Error& e) {
        CHECK(e.code() == Errc::kUnresolvedIntent);
      }
    }
    resolved.push_back(at_embedding);
  }
  CHECK(resolved.front().size() == questions.size());
  for (std::size_t k = 1; k < resolved.size(); ++k) {
    CHECK(std::includes(resolved[k - 1].begin(), resolved[k - 1].end(), resolved[k].begin(), resolved[k].end()));
  }
  CHECK(resolved.back().size() > 0);
}

TEST_CASE("self retrieval holds for any tau up to 1") {
  std::mt19937_64 rng(1234);
  MockEmbedder emb;
  const std::vector<std::string> vocab = {"where", "is", "the", "head", "office", "of", "gree", "who", "runs",
                                          "moutai", "year", "founded", "shares", "listed"};
  for (int i = 0; i < 100; ++i) {
    IntentBase base;
    std::string s;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 6); ++k) s += vocab[rng() % vocab.size()] + " ";
    const auto q = cq(s);
    base.upsert("noise", "unrelated words entirely", emb.embed("unrelated words entirely"));
    base.upsert("target", q.text, emb.embed(q.text));
    for (double tau : {0.0, 0.8, 1.0}) {
      const auto r = recognize(q, base, CascadeConfig{tau}, {nullptr, &emb, nullptr, {}});
      CHECK(r.method == RecognitionMethod::kEmbedding);
      CHECK(r.score >= 1.0 - 1e-9);
      // A different label may hold an identical vector; ties go to the smaller label.
      CHECK((r.label == "target" || r.matched_record->vector == emb.embed(q.text)));
    }
  }
}

TEST_CASE("concurrent readers and writers keep the base consistent") {
  IntentBase base;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&base, t] {
      for (int i = 0; i < 100; ++i) {
        const std::string text = "q" + std::to_string(t) + "_" + std::to_string(i);
        base.upsert("l" + std::to_string(t), text, mock_embed(text));
        (void)base.nearest(mock_embed(text));
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(base.size() == 400);
  const auto snap = base.snapshot();
  std::set<std::uint64_t> seqs;
  for (const auto& r : snap) seqs.insert(r.inserted_at);
  CHECK(seqs.size() == 400);
}
