#include "kbqa/intent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <tuple>

#include <json.hpp>

#include "kbqa/error.hpp"
#include "kbqa/unicode_text.hpp"

namespace kbqa {

IntentRule::IntentRule(std::string label, std::vector<std::set<std::string>> keyword_groups,
                       std::optional<std::string> pattern)
    : label_(std::move(label)), pattern_(std::move(pattern)) {
  if (label_.empty()) throw Error(Errc::kInvalidArgument, "rule label must be non-empty");
  for (auto& group : keyword_groups) {
    std::set<std::string> folded;
    for (const auto& kw : group) {
      std::string f = text::nfc_fold(kw);
      if (!f.empty()) folded.insert(std::move(f));
    }
    if (folded.empty()) {
      throw Error(Errc::kInvalidArgument, "rule '" + label_ + "' has an empty keyword group");
    }
    groups_.push_back(std::move(folded));
  }
  if (pattern_ && pattern_->empty()) pattern_.reset();
  if (groups_.empty() && !pattern_) {
    throw Error(Errc::kInvalidArgument, "rule '" + label_ + "' needs a keyword group or a pattern");
  }
  if (pattern_) {
    try {
      compiled_ = std::make_shared<const std::regex>(*pattern_, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(Errc::kInvalidArgument,
                  "rule '" + label_ + "' pattern does not compile: " + std::string(e.what()));
    }
  }
}

bool IntentRule::matches(const CleanQuestion& clean) const {
  for (const auto& group : groups_) {
    const bool hit = std::any_of(clean.tokens.begin(), clean.tokens.end(),
                                 [&](const std::string& t) { return group.count(t) > 0; });
    if (!hit) return false;
  }
  return !compiled_ || std::regex_search(clean.text, *compiled_);
}

std::optional<std::string> match_rules(const CleanQuestion& clean, std::span<const IntentRule> rules) {
  for (const auto& rule : rules) {
    if (rule.matches(clean)) return rule.label();
  }
  return std::nullopt;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::kDimensionMismatch,
                "cosine of vectors with dimensions " + std::to_string(a.dim()) + " and " +
                    std::to_string(b.dim()));
  }
  const auto x = a.values();
  const auto y = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  // rounding can leave identical unit vectors a few ulps short of 1
  constexpr double kSnap = 1e-12;
  if (dot > 1.0 - kSnap) return 1.0;
  if (dot < -1.0 + kSnap) return -1.0;
  return dot;
}

namespace {

bool better(double sim, const IntentRecord& rec, double best_sim, const IntentRecord& best) {
  if (sim != best_sim) return sim > best_sim;
  if (rec.label != best.label) return rec.label < best.label;
  return rec.inserted_at < best.inserted_at;
}

}  // namespace

std::optional<NearestMatch> nearest_intent(const EmbeddingVector& v, std::span<const IntentRecord> records) {
  const IntentRecord* best = nullptr;
  double best_sim = 0.0;
  for (const auto& rec : records) {
    const double sim = cosine(v, rec.vector);
    if (best == nullptr || better(sim, rec, best_sim, *best)) {
      best = &rec;
      best_sim = sim;
    }
  }
  if (best == nullptr) return std::nullopt;
  return NearestMatch{*best, best_sim};
}

// ---------------------------------------------------------------------------

IntentBase::IntentBase(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error(Errc::kInvalidArgument, "intent base dimension must be positive");
}

void IntentBase::check_dim(const EmbeddingVector& v) const {
  if (v.dim() != dim_) {
    throw Error(Errc::kDimensionMismatch, "vector dimension " + std::to_string(v.dim()) +
                                              " does not match intent base dimension " +
                                              std::to_string(dim_));
  }
}

bool IntentBase::upsert(const std::string& label, const std::string& question_text,
                        const EmbeddingVector& vector) {
  if (label.empty()) throw Error(Errc::kInvalidLabel, "intent label must be non-empty");
  check_dim(vector);
  std::unique_lock lock(mu_);
  if (!keys_.emplace(label, question_text).second) return false;
  records_.push_back(IntentRecord{label, question_text, vector, next_seq_++});
  return true;
}

std::optional<NearestMatch> IntentBase::nearest(const EmbeddingVector& v) const {
  check_dim(v);
  std::shared_lock lock(mu_);
  return nearest_intent(v, records_);
}

std::size_t IntentBase::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::vector<IntentRecord> IntentBase::snapshot() const {
  std::shared_lock lock(mu_);
  return records_;
}

void IntentBase::restore(std::vector<IntentRecord> records) {
  for (const auto& r : records) check_dim(r.vector);
  std::unique_lock lock(mu_);
  records_ = std::move(records);
  keys_.clear();
  next_seq_ = 1;
  for (const auto& r : records_) {
    keys_.emplace(r.label, r.example_text);
    next_seq_ = std::max(next_seq_, r.inserted_at + 1);
  }
}

void IntentBase::clear() { restore({}); }

std::map<std::string, std::size_t> IntentBase::label_counts() const {
  std::shared_lock lock(mu_);
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records_) ++counts[r.label];
  return counts;
}

bool IntentBase::has_label(const std::string& label) const {
  std::shared_lock lock(mu_);
  return std::any_of(records_.begin(), records_.end(),
                     [&](const IntentRecord& r) { return r.label == label; });
}

std::string IntentBase::fingerprint() const {
  std::shared_lock lock(mu_);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& r : records_) {
    mix(r.label.data(), r.label.size());
    mix("\0", 1);
    mix(r.example_text.data(), r.example_text.size());
    mix("\0", 1);
    for (double d : r.vector.values()) {
      const auto bits = std::bit_cast<std::uint64_t>(d);
      mix(&bits, sizeof bits);
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx-%zu", static_cast<unsigned long long>(h), records_.size());
  return buf;
}

void IntentBase::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kFileUnreadable, "cannot write intent base " + path.string());
  for (const auto& r : snapshot()) {
    nlohmann::json j{{"label", r.label},
                     {"example", r.example_text},
                     {"vector", std::vector<double>(r.vector.values().begin(), r.vector.values().end())}};
    out << j.dump() << '\n';
  }
}

void IntentBase::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileUnreadable, "cannot read intent base " + path.string());
  // Every line is validated before anything is stored.
  std::vector<std::tuple<std::string, std::string, EmbeddingVector>> parsed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto vec = EmbeddingVector::normalized(j.at("vector").get<std::vector<double>>());
      check_dim(vec);
      parsed.emplace_back(j.at("label").get<std::string>(), j.at("example").get<std::string>(), std::move(vec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kMalformedLine, "intent base line " + std::to_string(line_no) + ": " + e.what(),
                  {{"line", std::to_string(line_no)}});
    }
  }
  for (const auto& [label, text, vec] : parsed) upsert(label, text, vec);
}

// ---------------------------------------------------------------------------

void CascadeConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(Errc::kConfigError, "tau must lie in [0, 1]");
  }
}

std::string_view default_intent_demonstration() {
  return "Question: headquarters wanke company located\n"
         "Reasoning: the question names one company (wanke) and asks where its headquarters is. "
         "Among the known intents, hq_location returns the headquarters city of a company, so it "
         "fits. No new intent is needed.\n"
         "intent: hq_location";
}

std::string_view method_name(RecognitionMethod m) {
  switch (m) {
    case RecognitionMethod::kRule: return "rule";
    case RecognitionMethod::kEmbedding: return "embedding";
    case RecognitionMethod::kLlm: return "llm";
  }
  return "rule";
}

std::string slugify_label(std::string_view input) {
  const std::u32string cps = text::decode_utf8(text::nfc_fold(input));
  std::string out;
  bool pending_sep = false;
  for (char32_t cp : cps) {
    const auto cls = text::classify(cp);
    if (cls == text::CharClass::kSpace || cp == U'_') {
      pending_sep = true;
      continue;
    }
    if (cls != text::CharClass::kWord && cls != text::CharClass::kCjk && cp != U'-') continue;
    if (pending_sep && !out.empty()) out.push_back('_');
    pending_sep = false;
    text::append_utf8(out, cp);
  }
  return out;
}

std::optional<std::string> parse_intent_reply(std::string_view reply) {
  std::size_t start = 0;
  while (start <= reply.size()) {
    auto end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    std::string_view line = reply.substr(start, end - start);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.size() > 7) {
      std::string head(line.substr(0, 6));
      std::transform(head.begin(), head.end(), head.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      auto rest = line.substr(6);
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      if (head == "intent" && !rest.empty() && rest.front() == ':') {
        std::string label = slugify_label(rest.substr(1));
        if (!label.empty()) return label;
      }
    }
    start = end + 1;
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void unresolved(const std::string& cause, const std::string& message, const std::string& why) {
  throw Error(Errc::kUnresolvedIntent, message, {{"cause", cause}, {"explanation", why}});
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

RecognitionResult recognize(const CleanQuestion& clean, IntentBase& base, const CascadeConfig& config,
                            const CascadeTiers& tiers) {
  config.validate();
  RecognitionResult result;
  std::string why;

  if (tiers.rules != nullptr) {
    if (auto label = match_rules(clean, *tiers.rules)) {
      result.label = *label;
      result.method = RecognitionMethod::kRule;
      result.score = 1.0;
      result.explanation = "rule: matched " + *label;
      return result;
    }
    why += "rule: no match; ";
  } else {
    why += "rule: disabled; ";
  }

  if (tiers.embedder != nullptr) {
    try {
      result.question_vector = tiers.embedder->embed(clean.text);
      auto best = base.nearest(*result.question_vector);
      if (best && best->similarity >= config.tau) {
        result.label = best->record.label;
        result.method = RecognitionMethod::kEmbedding;
        result.score = best->similarity;
        result.matched_record = std::move(best->record);
        result.explanation = why + "embedding: " + result.label + " at " + format_score(result.score);
        return result;
      }
      why += best ? "embedding: best " + best->record.label + " at " + format_score(best->similarity) +
                        " below tau " + format_score(config.tau) + "; "
                  : std::string("embedding: base empty; ");
    } catch (const Error& e) {
      if (e.code() != Errc::kProviderUnavailable) throw;
      result.question_vector.reset();
      why += "embedding: provider unavailable; ";
    }
  } else {
    why += "embedding: disabled; ";
  }

  if (tiers.llm == nullptr) {
    unresolved("declined", "no tier could resolve the question's intent", why + "llm: disabled");
  }

  std::set<std::string> inventory;
  for (const auto& [label, n] : base.label_counts()) inventory.insert(label);
  if (tiers.rules != nullptr) {
    for (const auto& r : *tiers.rules) inventory.insert(r.label());
  }
  inventory.insert(tiers.extra_labels.begin(), tiers.extra_labels.end());

  std::string inventory_text;
  for (const auto& label : inventory) {
    if (!inventory_text.empty()) inventory_text += ", ";
    inventory_text += label;
  }
  PromptRequest request{PromptTemplateId::kIntentFallback,
                        {{"question", clean.text},
                         {"intents", inventory_text},
                         {"demonstration", config.demonstration.empty()
                                               ? std::string(default_intent_demonstration())
                                               : config.demonstration}}};
  LlmReply reply;
  try {
    reply = tiers.llm->complete(request);
  } catch (const Error& e) {
    if (e.code() != Errc::kProviderUnavailable) throw;
    unresolved("provider_unavailable", "intent could not be resolved: language model unavailable",
               why + "llm: " + e.what());
  }
  auto parsed = parse_intent_reply(reply.text);
  if (!parsed) {
    unresolved("no_intent", "the language model did not name an intent", why + "llm: no intent line");
  }

  std::string label = *parsed;
  bool is_new = true;
  for (const auto& known : inventory) {
    if (slugify_label(known) == label) {
      label = known;
      is_new = false;
      break;
    }
  }
  if (is_new && !config.allow_new_labels) {
    unresolved("new_label_rejected", "the language model proposed an unknown intent '" + label + "'",
               why + "llm: new label " + label + " rejected");
  }

  result.label = label;
  result.method = RecognitionMethod::kLlm;
  result.score = 1.0;
  result.is_new_intent = is_new;
  result.explanation = why + "llm: " + label + (is_new ? " (new)" : "");
  if (result.question_vector) {
    base.upsert(label, clean.text, *result.question_vector);
  }
  return result;
}

}  // namespace kbqa
