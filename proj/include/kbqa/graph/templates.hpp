#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace kbqa::graph {

/// Intent-keyed CQL with positional placeholders XX1..XXn (bare XX is XX1).
/// Placeholders are only recognized outside string literals.
struct QueryTemplate {
  std::string intent_label;
  std::string cql_text;
  std::size_t arity = 0;

  friend bool operator==(const QueryTemplate&, const QueryTemplate&) = default;
};

/// Distinct placeholder indices in ascending order.
std::vector<std::size_t> placeholder_indices(std::string_view cql_text);

/// Validates the declared arity against the placeholders (they must be
/// exactly 1..arity, otherwise ArityDeclarationMismatch) and probe-parses the
/// text with quoted stand-ins (ParseError on failure).
QueryTemplate make_template(std::string intent_label, std::string cql_text, std::size_t arity);

/// Substitutes the i-th entity id as a quoted literal for XXi. Throws
/// ArityMismatch with detail {expected, got}.
std::string fill_template(const QueryTemplate& t, const std::vector<std::string>& entities);

class TemplateLibrary {
 public:
  /// Returns true when an existing template for the label was replaced.
  bool put(QueryTemplate t);
  std::optional<QueryTemplate> find(const std::string& intent_label) const;
  std::vector<std::string> labels() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, QueryTemplate> by_label_;
};

}  // namespace kbqa::graph
