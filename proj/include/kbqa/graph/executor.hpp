#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kbqa/graph/cql.hpp"
#include "kbqa/graph/triple_store.hpp"

namespace kbqa::graph {

/// One result row, one entry per return item in RETURN order.
struct BindingRow {
  std::vector<std::pair<std::string, Value>> values;

  /// Throws InvalidArgument when the column is absent.
  const Value& at(std::string_view column) const;

  friend bool operator==(const BindingRow&, const BindingRow&) = default;
};

/// Column-by-column comparison of row values.
std::strong_ordering compare_rows(const BindingRow& a, const BindingRow& b);

/// Smallest object of <node, key, ?>, or null when the node has none.
Value property_value(const GraphSnapshot& graph, const Value& node, const std::string& key);

/// Backtracking join over the edge patterns, then projection, COUNT grouping
/// (distinct values per group), ordering and LIMIT. Without ORDER BY, rows
/// come back in full-row order. Read-only.
std::vector<BindingRow> execute(const CqlQuery& query, const GraphSnapshot& graph);
std::vector<BindingRow> execute(const CqlQuery& query, const TripleStore& store);

}  // namespace kbqa::graph
