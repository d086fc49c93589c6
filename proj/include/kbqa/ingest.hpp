#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "kbqa/graph/templates.hpp"
#include "kbqa/graph/triple_store.hpp"
#include "kbqa/intent.hpp"
#include "kbqa/preprocess.hpp"
#include "kbqa/providers.hpp"

namespace kbqa {

struct IngestIssue {
  std::size_t line = 0;
  std::string reason;
};

/// loaded + rejected always equals the number of records read. `added`
/// counts records that actually changed the target (re-loads add nothing).
struct IngestReport {
  std::size_t loaded = 0;
  std::size_t rejected = 0;
  std::vector<IngestIssue> errors;
  std::vector<std::string> notes;
  std::size_t added = 0;
};

enum class IngestKind { kTriples, kSeeds, kTemplates, kRules };
/// "triples", "seeds", "templates", "rules"; throws InvalidArgument otherwise.
IngestKind parse_ingest_kind(std::string_view name);
std::string_view ingest_kind_name(IngestKind kind);

enum class TripleFormat { kCsv, kJsonl };
/// From the file extension; throws UnknownFormat unless .csv or .jsonl.
TripleFormat triple_format_for(const std::filesystem::path& path);
/// Seeds, templates and rules are JSON Lines only; throws UnknownFormat.
void require_jsonl(const std::filesystem::path& path);

/// Splits RFC 4180 text into records; each record keeps its first line number.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> parse_csv(std::string_view text);

/// CSV columns subject,predicate,object,object_type (an optional header row
/// is skipped) or JSON Lines {"s","p","o","t"}; t is entity, string or number.
IngestReport load_triples(std::istream& in, TripleFormat format, graph::TripleStore& store);
IngestReport load_triples(const std::filesystem::path& path, graph::TripleStore& store);

using Cleaner = std::function<CleanQuestion(const RawQuestion&)>;

/// {"label", "examples": [...], "lang"?}. Examples are cleaned, embedded and
/// stored as cleaned text. One record per line, whatever its example count.
IngestReport load_intent_seeds(std::istream& in, IntentBase& base, const Embedder& embedder, const Cleaner& clean);
IngestReport load_intent_seeds(const std::filesystem::path& path, IntentBase& base, const Embedder& embedder,
                               const Cleaner& clean);

/// {"intent", "cql", "arity"}; last template per intent wins and is noted.
IngestReport load_templates(std::istream& in, graph::TemplateLibrary& library);
IngestReport load_templates(const std::filesystem::path& path, graph::TemplateLibrary& library);

/// {"label", "keyword_groups", "pattern"}; appended in file order. A rule
/// identical to one already present is not appended again.
IngestReport load_rules(std::istream& in, std::vector<IntentRule>& rules);
IngestReport load_rules(const std::filesystem::path& path, std::vector<IntentRule>& rules);

}  // namespace kbqa
