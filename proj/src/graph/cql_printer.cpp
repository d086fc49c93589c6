#include "kbqa/graph/cql.hpp"

namespace kbqa::graph {

std::string quote_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

namespace {

std::string literal_text(const Value& v) {
  return v.is_number() ? format_number(v.as_number()) : quote_string(v.text());
}

void print_node(std::string& out, const NodePattern& n) {
  out.push_back('(');
  if (n.variable) out += *n.variable;
  if (n.label) out += ":" + *n.label;
  if (!n.props.empty()) {
    if (n.variable || n.label) out.push_back(' ');
    out.push_back('{');
    for (std::size_t i = 0; i < n.props.size(); ++i) {
      if (i > 0) out += ", ";
      out += n.props[i].key + ":" + literal_text(n.props[i].literal);
    }
    out.push_back('}');
  }
  out.push_back(')');
}

}  // namespace

std::string print_cql(const CqlQuery& q) {
  std::string out = "MATCH ";
  for (std::size_t i = 0; i < q.patterns.size(); ++i) {
    if (i > 0) out += ", ";
    print_node(out, q.patterns[i].start);
    for (const auto& step : q.patterns[i].steps) {
      const std::string rel = step.relation ? ":" + *step.relation : std::string();
      out += step.direction == Direction::kOut ? "-[" + rel + "]->" : "<-[" + rel + "]-";
      print_node(out, step.node);
    }
  }
  out += " RETURN ";
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (i > 0) out += ", ";
    out += column_name(q.items[i]);
  }
  if (q.order_by) {
    out += " ORDER BY " + column_name(q.order_by->item) + (q.order_by->descending ? " DESC" : " ASC");
  }
  if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
  return out;
}

}  // namespace kbqa::graph
