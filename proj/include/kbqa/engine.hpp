#pragma once

#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kbqa/adapt.hpp"
#include "kbqa/config.hpp"
#include "kbqa/graph/templates.hpp"
#include "kbqa/graph/triple_store.hpp"
#include "kbqa/ingest.hpp"
#include "kbqa/intent.hpp"
#include "kbqa/preprocess.hpp"
#include "kbqa/providers.hpp"
#include "kbqa/respond.hpp"

namespace kbqa {

/// Tiers switched off for ablation. A disabled tier declines without being
/// called; disabling adapt opens every session already closed.
struct Ablation {
  bool rule = false;
  bool embedding = false;
  bool llm = false;
  bool adapt = false;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct AskResult {
  AnswerPayload payload;
  std::string session_id;
};

struct FeedbackResult {
  std::string session_id;
  Turn turn;
};

struct ProviderHealth {
  std::string id;
  std::string status;  // "ok", "unreachable" or "disabled"
};

struct Health {
  std::string status;  // "ok" or "degraded"
  ProviderHealth embedder;
  ProviderHealth llm;
};

/// Owns the knowledge graph, intent base, rules, templates, providers and
/// dialogue sessions, and runs the question pipeline over them.
class Engine {
 public:
  struct Providers {
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const LlmProvider> llm;
  };

  Engine(Providers providers, StopwordList stop_en, StopwordList stop_zh, CascadeConfig cascade,
         std::chrono::seconds session_idle_timeout = std::chrono::minutes(15),
         std::chrono::milliseconds request_budget = std::chrono::seconds(2), SessionManager::Now now = {});

  /// Builds providers from the config and loads every configured data file.
  /// Throws ConfigError for bad settings and the ingest errors for unreadable files.
  static std::unique_ptr<Engine> from_config(const ServiceConfig& config);

  AskResult ask(const RawQuestion& question, const std::optional<std::string>& session_id = std::nullopt);

  /// step is "satisfied" (value true/false), "cause" (intent/other) or
  /// "intent" (the corrected label).
  FeedbackResult feedback(const std::string& session_id, std::string_view step, const std::string& value);

  IngestReport ingest(IngestKind kind, std::istream& in, const std::string& filename);
  IngestReport ingest_file(IngestKind kind, const std::filesystem::path& path);

  Ablation ablation() const;
  void set_ablation(const Ablation& a);

  std::map<std::string, std::size_t> intent_counts() const { return base_->label_counts(); }
  Health health() const;

  IntentBase& intent_base() { return *base_; }
  const IntentBase& intent_base() const { return *base_; }
  const graph::TripleStore& store() const { return store_; }
  const graph::TemplateLibrary& templates() const { return templates_; }
  std::shared_ptr<const std::vector<IntentRule>> rules() const;
  SessionManager& sessions() { return sessions_; }

  const Embedder& embedder() const { return *providers_.embedder; }
  const LlmProvider& llm() const { return *providers_.llm; }

  CascadeConfig cascade() const;
  void set_tau(double tau);

  /// Reports from the data files loaded by from_config, keyed by kind.
  const std::vector<std::pair<std::string, IngestReport>>& startup_reports() const { return startup_reports_; }

 private:
  std::shared_ptr<const EntityLexicon> lexicon(const graph::SnapshotPtr& graph);
  const StopwordList& stoplist(Lang lang) const { return lang == Lang::kZh ? stop_zh_ : stop_en_; }

  Providers providers_;
  StopwordList stop_en_;
  StopwordList stop_zh_;
  std::chrono::milliseconds request_budget_;

  std::unique_ptr<IntentBase> base_;
  graph::TripleStore store_;
  graph::TemplateLibrary templates_;
  SessionManager sessions_;

  mutable std::mutex mu_;  // guards the fields below
  CascadeConfig cascade_;
  Ablation ablation_;
  std::shared_ptr<const std::vector<IntentRule>> rules_;
  graph::SnapshotPtr lexicon_graph_;
  std::shared_ptr<const EntityLexicon> lexicon_;
  std::mutex rules_writer_;
  std::vector<std::pair<std::string, IngestReport>> startup_reports_;
};

}  // namespace kbqa
