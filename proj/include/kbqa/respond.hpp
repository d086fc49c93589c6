#pragma once

#include <map>
#include <string>
#include <vector>

#include "kbqa/graph/executor.hpp"
#include "kbqa/graph/templates.hpp"
#include "kbqa/graph/triple_store.hpp"
#include "kbqa/intent.hpp"
#include "kbqa/preprocess.hpp"
#include "kbqa/providers.hpp"

namespace kbqa {

/// Surface form (folded tokens joined by single spaces) to entity id.
class EntityLexicon {
 public:
  /// Registers a tokenized surface form; the first id for a form wins.
  void add(const std::vector<std::string>& tokens, const std::string& entity_id);
  /// Adds a raw surface to the CJK merge lexicon.
  void add_merge_form(std::string_view surface) { merge_.add(surface); }

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t max_tokens() const noexcept { return max_tokens_; }

  /// Raw surfaces, for merging CJK runs during tokenization.
  const MergeLexicon& merge() const noexcept { return merge_; }

 private:
  std::map<std::string, std::string> entries_;
  std::size_t max_tokens_ = 0;
  MergeLexicon merge_;
};

/// Every entity id (subjects and entity objects) plus the objects of its
/// `name` and `alias` triples. Each surface is keyed as tokenized in both
/// languages, and again with each stoplist applied, so it still matches
/// after clean() has removed stop words from the question.
EntityLexicon build_lexicon(const graph::GraphSnapshot& graph,
                            const std::vector<const StopwordList*>& stoplists = {});

/// Leftmost-longest matching over the token sequence; duplicates kept.
std::vector<std::string> extract_entities(const CleanQuestion& clean, const EntityLexicon& lexicon);

enum class RenderMethod { kLlm, kTemplateFallback };
std::string_view render_method_name(RenderMethod m);

struct TraceStep {
  std::string stage;
  std::string outcome;
};

struct AnswerPayload {
  std::string answer_text;
  std::vector<graph::BindingRow> rows;
  RecognitionResult recognition;
  std::string cql;
  RenderMethod render_method = RenderMethod::kTemplateFallback;
  std::vector<TraceStep> trace;
  CleanQuestion question;
  std::vector<std::string> entities;
};

/// `col=value` pairs joined by "; ", one line per row.
std::string serialize_rows(const std::vector<graph::BindingRow>& rows);

/// Deterministic rendering built only from row values and fixed glue text.
std::string render_fallback(const graph::CqlQuery& query, const std::vector<graph::BindingRow>& rows);

struct AnswerDeps {
  const StopwordList& stoplist;
  IntentBase& base;
  const CascadeConfig& cascade;
  const CascadeTiers& tiers;
  const graph::TemplateLibrary& templates;
  const EntityLexicon& lexicon;
  const graph::GraphSnapshot& graph;
  const LlmProvider* renderer = nullptr;  // null renders with the fallback
};

/// clean, recognize, template lookup, ner, fill, parse, execute, render.
/// Errors thrown after recognition carry the resolved label and method in
/// their detail (keys "intent", "method").
AnswerPayload answer(const RawQuestion& raw, const AnswerDeps& deps);

}  // namespace kbqa
