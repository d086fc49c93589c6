#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kbqa/graph/value.hpp"

namespace kbqa::graph {

// Executable Cypher subset:
//
//   query    := "MATCH" pattern ("," pattern)* "RETURN" item ("," item)* order? limit?
//   pattern  := node (edge node)*
//   node     := "(" IDENT? (":" IDENT)? props? ")"
//   edge     := "-[" (":" IDENT)? "]->" | "<-[" (":" IDENT)? "]-"
//   props    := "{" IDENT ":" literal ("," IDENT ":" literal)* "}"
//   item     := IDENT | IDENT "." IDENT | "COUNT(" IDENT ")"
//   order    := "ORDER BY" item ("ASC"|"DESC")?
//   limit    := "LIMIT" POSINT
//   literal  := quoted string | number
//
// Keywords are case-insensitive and reserved. A node label L holds when the
// node has a `type` triple whose object text is L; a property k:v holds when
// the triple <node, k, v> exists.

inline constexpr std::string_view kTypePredicate = "type";

struct PropConstraint {
  std::string key;
  Value literal;  // number or string

  friend bool operator==(const PropConstraint&, const PropConstraint&) = default;
};

struct NodePattern {
  std::optional<std::string> variable;
  std::optional<std::string> label;
  std::vector<PropConstraint> props;

  friend bool operator==(const NodePattern&, const NodePattern&) = default;
};

enum class Direction { kOut, kIn };  // -[]-> and <-[]-

struct EdgeStep {
  std::optional<std::string> relation;
  Direction direction = Direction::kOut;
  NodePattern node;

  friend bool operator==(const EdgeStep&, const EdgeStep&) = default;
};

struct PathPattern {
  NodePattern start;
  std::vector<EdgeStep> steps;

  friend bool operator==(const PathPattern&, const PathPattern&) = default;
};

struct ReturnItem {
  enum class Kind { kVariable, kProperty, kCount };
  Kind kind = Kind::kVariable;
  std::string variable;
  std::string property;  // kProperty only

  friend bool operator==(const ReturnItem&, const ReturnItem&) = default;
};

struct OrderBy {
  ReturnItem item;
  bool descending = false;

  friend bool operator==(const OrderBy&, const OrderBy&) = default;
};

struct CqlQuery {
  std::vector<PathPattern> patterns;
  std::vector<ReturnItem> items;
  std::optional<OrderBy> order_by;
  std::optional<std::uint64_t> limit;

  friend bool operator==(const CqlQuery&, const CqlQuery&) = default;
};

/// Column header for a return item: `x`, `c.name`, `COUNT(b)`.
std::string column_name(const ReturnItem& item);

/// Throws ParseError with line, column and what was expected. Also enforces
/// the semantic rules: returned/ordered variables are bound by a pattern, at
/// most one COUNT, and the ORDER BY item is one of the RETURN items.
CqlQuery parse_cql(std::string_view text);

/// Canonical single-line form; parse_cql(print_cql(q)) == q.
std::string print_cql(const CqlQuery& query);

std::string quote_string(std::string_view s);
bool is_reserved_word(std::string_view word);

}  // namespace kbqa::graph
