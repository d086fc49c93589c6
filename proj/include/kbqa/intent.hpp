#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "kbqa/preprocess.hpp"
#include "kbqa/providers.hpp"

namespace kbqa {

/// A rule matches when every keyword group shares at least one token with the
/// cleaned question and the optional pattern matches the cleaned text.
class IntentRule {
 public:
  /// Throws InvalidArgument for an empty label, an empty group, no groups and
  /// no pattern, or a pattern that fails to compile.
  IntentRule(std::string label, std::vector<std::set<std::string>> keyword_groups,
             std::optional<std::string> pattern = std::nullopt);

  const std::string& label() const noexcept { return label_; }
  const std::vector<std::set<std::string>>& keyword_groups() const noexcept { return groups_; }
  const std::optional<std::string>& pattern() const noexcept { return pattern_; }

  bool matches(const CleanQuestion& clean) const;

 private:
  std::string label_;
  std::vector<std::set<std::string>> groups_;
  std::optional<std::string> pattern_;
  std::shared_ptr<const std::regex> compiled_;
};

/// First matching rule in order wins.
std::optional<std::string> match_rules(const CleanQuestion& clean, std::span<const IntentRule> rules);

struct IntentRecord {
  std::string label;
  std::string example_text;
  EmbeddingVector vector;
  std::uint64_t inserted_at = 0;
};

/// Dot product of unit vectors, clamped to [-1, 1].
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct NearestMatch {
  IntentRecord record;
  double similarity = 0.0;
};

/// Linear scan; ties go to the smaller label, then the earlier insertion.
std::optional<NearestMatch> nearest_intent(const EmbeddingVector& v, std::span<const IntentRecord> records);

/// The similarity question vector base. Readers share, writers serialize.
class IntentBase {
 public:
  explicit IntentBase(std::size_t dim = kDefaultEmbeddingDim);
  IntentBase(const IntentBase&) = delete;
  IntentBase& operator=(const IntentBase&) = delete;

  std::size_t dim() const noexcept { return dim_; }

  /// Appends a record; an existing (label, text) pair is a no-op. Returns
  /// whether a record was added.
  bool upsert(const std::string& label, const std::string& question_text, const EmbeddingVector& vector);

  std::optional<NearestMatch> nearest(const EmbeddingVector& v) const;

  std::size_t size() const;
  std::vector<IntentRecord> snapshot() const;
  void restore(std::vector<IntentRecord> records);
  void clear();

  std::map<std::string, std::size_t> label_counts() const;
  bool has_label(const std::string& label) const;

  /// Stable digest of (label, text, vector) contents in insertion order.
  std::string fingerprint() const;

  void save_jsonl(const std::filesystem::path& path) const;
  /// Re-normalizes stored vectors and rejects any whose dimension differs.
  void load_jsonl(const std::filesystem::path& path);

 private:
  void check_dim(const EmbeddingVector& v) const;

  std::size_t dim_;
  mutable std::shared_mutex mu_;
  std::vector<IntentRecord> records_;
  std::set<std::pair<std::string, std::string>> keys_;
  std::uint64_t next_seq_ = 1;
};

struct CascadeConfig {
  double tau = 0.80;
  bool allow_new_labels = true;
  std::string demonstration;  // reasoning example for the LLM tier; builtin when empty

  void validate() const;
};

std::string_view default_intent_demonstration();

enum class RecognitionMethod { kRule, kEmbedding, kLlm };
std::string_view method_name(RecognitionMethod m);

struct RecognitionResult {
  std::string label;
  RecognitionMethod method = RecognitionMethod::kRule;
  double score = 1.0;
  bool is_new_intent = false;
  std::optional<IntentRecord> matched_record;
  std::optional<EmbeddingVector> question_vector;  // set whenever the embedder ran
  std::string explanation;                          // per-tier outcomes, for tracing
};

/// A null pointer means the tier is switched off and declines.
struct CascadeTiers {
  const std::vector<IntentRule>* rules = nullptr;
  const Embedder* embedder = nullptr;
  const LlmProvider* llm = nullptr;
  std::vector<std::string> extra_labels;  // labels known beyond rules and base
};

/// Rules, then nearest stored question at or above tau, then the LLM
/// fallback whose label is written back into the base. Throws
/// UnresolvedIntent (detail "cause") when every enabled tier declines.
RecognitionResult recognize(const CleanQuestion& clean, IntentBase& base, const CascadeConfig& config,
                            const CascadeTiers& tiers);

/// Lowercase, whitespace runs to '_', only letters/digits/'_'/'-' kept.
std::string slugify_label(std::string_view text);

/// Extracts the label from a line of the form "intent: <label>".
std::optional<std::string> parse_intent_reply(std::string_view reply);

}  // namespace kbqa
