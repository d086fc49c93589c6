#include "kbqa/graph/executor.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "kbqa/error.hpp"

namespace kbqa::graph {

const Value& BindingRow::at(std::string_view column) const {
  for (const auto& [name, v] : values) {
    if (name == column) return v;
  }
  throw Error(Errc::kInvalidArgument, "row has no column '" + std::string(column) + "'");
}

std::strong_ordering compare_rows(const BindingRow& a, const BindingRow& b) {
  const std::size_t n = std::min(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = a.values[i].second <=> b.values[i].second; c != 0) return c;
  }
  return a.values.size() <=> b.values.size();
}

Value property_value(const GraphSnapshot& graph, const Value& node, const std::string& key) {
  if (!node.is_entity()) return Value::null();
  std::optional<Value> best;
  for (auto pos : graph.by_subject(node.text())) {
    const Triple& t = graph.at(pos);
    if (t.predicate == key && (!best || t.object < *best)) best = t.object;
  }
  return best.value_or(Value::null());
}

namespace {

bool literal_matches(const Value& literal, const Value& object) {
  if (literal.is_number()) return object.is_number() && object.as_number() == literal.as_number();
  return (object.kind() == ValueKind::kString || object.kind() == ValueKind::kEntity) &&
         object.text() == literal.text();
}

struct PairLess {
  bool operator()(const std::pair<std::string_view, const Value*>& a,
                  const std::pair<std::string_view, const Value*>& b) const {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  }
};

struct Edge {
  std::size_t src;
  std::size_t dst;
  const std::optional<std::string>* relation;
};

class Matcher {
 public:
  Matcher(const CqlQuery& q, const GraphSnapshot& g) : query_(q), graph_(g) {
    for (const auto& p : q.patterns) {
      std::size_t prev = slot_for(p.start);
      for (const auto& step : p.steps) {
        const std::size_t cur = slot_for(step.node);
        if (step.direction == Direction::kOut) {
          edges_.push_back({prev, cur, &step.relation});
        } else {
          edges_.push_back({cur, prev, &step.relation});
        }
        prev = cur;
      }
    }
    std::vector<bool> touched(constraints_.size(), false);
    for (const auto& e : edges_) touched[e.src] = touched[e.dst] = true;
    for (std::size_t s = 0; s < touched.size(); ++s) {
      if (!touched[s]) isolated_.push_back(s);
    }
    for (const auto& item : q.items) {
      auto it = named_.find(item.variable);
      if (it == named_.end()) {
        throw Error(Errc::kUnboundVariable, "variable '" + item.variable + "' is not bound by MATCH");
      }
      item_slots_.push_back(it->second);
    }
  }

  std::vector<std::vector<Value>> run() {
    binding_.assign(constraints_.size(), std::nullopt);
    done_.assign(edges_.size(), false);
    match_edges(0);
    return std::move(out_);
  }

 private:
  std::size_t slot_for(const NodePattern& n) {
    if (n.variable) {
      auto [it, fresh] = named_.emplace(*n.variable, constraints_.size());
      if (fresh) constraints_.emplace_back();
      constraints_[it->second].push_back(&n);
      return it->second;
    }
    constraints_.push_back({&n});
    return constraints_.size() - 1;
  }

  bool satisfies(std::size_t slot, const Value& v) const {
    for (const NodePattern* n : constraints_[slot]) {
      if (!n->label && n->props.empty()) continue;
      if (!v.is_entity()) return false;
      const auto rows = graph_.by_subject(v.text());
      if (n->label) {
        const bool ok = std::any_of(rows.begin(), rows.end(), [&](std::uint32_t pos) {
          const Triple& t = graph_.at(pos);
          return t.predicate == kTypePredicate && literal_matches(Value::string(*n->label), t.object);
        });
        if (!ok) return false;
      }
      for (const auto& pc : n->props) {
        const bool ok = std::any_of(rows.begin(), rows.end(), [&](std::uint32_t pos) {
          const Triple& t = graph_.at(pos);
          return t.predicate == pc.key && literal_matches(pc.literal, t.object);
        });
        if (!ok) return false;
      }
    }
    return true;
  }

  // Binds or checks one slot; records fresh bindings for undo.
  bool unify(std::size_t slot, const Value& v, std::vector<std::size_t>& bound_now) {
    if (binding_[slot]) return *binding_[slot] == v;
    if (!satisfies(slot, v)) return false;
    binding_[slot] = v;
    bound_now.push_back(slot);
    return true;
  }

  std::optional<std::size_t> pick_edge() const {
    std::optional<std::size_t> one_bound;
    std::optional<std::size_t> any;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (done_[i]) continue;
      const bool s = binding_[edges_[i].src].has_value();
      const bool d = binding_[edges_[i].dst].has_value();
      if (s && d) return i;
      if ((s || d) && !one_bound) one_bound = i;
      if (!any) any = i;
    }
    return one_bound ? one_bound : any;
  }

  void match_edges(std::size_t matched) {
    if (matched == edges_.size()) {
      match_isolated(0);
      return;
    }
    const std::size_t ei = *pick_edge();
    const Edge& e = edges_[ei];
    done_[ei] = true;

    std::span<const std::uint32_t> candidates;
    std::vector<std::uint32_t> all;
    if (binding_[e.src]) {
      if (binding_[e.src]->is_entity()) candidates = graph_.by_subject(binding_[e.src]->text());
    } else if (binding_[e.dst]) {
      candidates = graph_.by_object(*binding_[e.dst]);
    } else if (*e.relation) {
      candidates = graph_.by_predicate(**e.relation);
    } else {
      all.resize(graph_.size());
      for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
      candidates = all;
    }

    // An untyped edge is one assignment per node pair, however many
    // predicates connect the pair.
    std::set<std::pair<std::string_view, const Value*>, PairLess> seen;
    for (auto pos : candidates) {
      const Triple& t = graph_.at(pos);
      if (*e.relation && t.predicate != **e.relation) continue;
      if (!*e.relation && !seen.insert({t.subject, &t.object}).second) continue;
      std::vector<std::size_t> bound_now;
      if (unify(e.src, Value::entity(t.subject), bound_now) && unify(e.dst, t.object, bound_now)) {
        match_edges(matched + 1);
      }
      for (auto s : bound_now) binding_[s].reset();
    }
    done_[ei] = false;
  }

  void match_isolated(std::size_t k) {
    if (k == isolated_.size()) {
      emit();
      return;
    }
    const std::size_t slot = isolated_[k];
    if (binding_[slot]) {
      match_isolated(k + 1);
      return;
    }
    if (domain_.empty()) domain_ = graph_.nodes();
    for (const auto& v : domain_) {
      if (!satisfies(slot, v)) continue;
      binding_[slot] = v;
      match_isolated(k + 1);
    }
    binding_[slot].reset();
  }

  void emit() {
    std::vector<Value> tuple;
    tuple.reserve(query_.items.size());
    for (std::size_t i = 0; i < query_.items.size(); ++i) {
      const Value& v = *binding_[item_slots_[i]];
      if (query_.items[i].kind == ReturnItem::Kind::kProperty) {
        tuple.push_back(property_value(graph_, v, query_.items[i].property));
      } else {
        tuple.push_back(v);
      }
    }
    out_.push_back(std::move(tuple));
  }

  const CqlQuery& query_;
  const GraphSnapshot& graph_;
  std::map<std::string, std::size_t> named_;
  std::vector<std::vector<const NodePattern*>> constraints_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> isolated_;
  std::vector<std::size_t> item_slots_;
  std::vector<std::optional<Value>> binding_;
  std::vector<bool> done_;
  std::vector<Value> domain_;
  std::vector<std::vector<Value>> out_;
};

std::vector<BindingRow> finalize(const CqlQuery& q, std::vector<std::vector<Value>> tuples) {
  std::optional<std::size_t> count_at;
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (q.items[i].kind == ReturnItem::Kind::kCount) count_at = i;
  }
  if (count_at) {
    std::map<std::vector<Value>, std::set<Value>> groups;
    for (auto& t : tuples) {
      Value counted = t[*count_at];
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(*count_at));
      groups[std::move(t)].insert(std::move(counted));
    }
    tuples.clear();
    for (auto& [key, members] : groups) {
      std::vector<Value> row = key;
      row.insert(row.begin() + static_cast<std::ptrdiff_t>(*count_at),
                 Value::number(static_cast<double>(members.size())));
      tuples.push_back(std::move(row));
    }
  }

  std::vector<BindingRow> rows;
  rows.reserve(tuples.size());
  for (auto& t : tuples) {
    BindingRow row;
    for (std::size_t i = 0; i < q.items.size(); ++i) {
      row.values.emplace_back(column_name(q.items[i]), std::move(t[i]));
    }
    rows.push_back(std::move(row));
  }

  std::optional<std::size_t> order_at;
  if (q.order_by) {
    for (std::size_t i = 0; i < q.items.size() && !order_at; ++i) {
      if (q.items[i] == q.order_by->item) order_at = i;
    }
  }
  const bool desc = q.order_by && q.order_by->descending;
  std::stable_sort(rows.begin(), rows.end(), [&](const BindingRow& a, const BindingRow& b) {
    if (order_at) {
      const auto c = a.values[*order_at].second <=> b.values[*order_at].second;
      if (c != 0) return desc ? c > 0 : c < 0;
    }
    return compare_rows(a, b) < 0;
  });
  if (q.limit && rows.size() > *q.limit) rows.resize(static_cast<std::size_t>(*q.limit));
  return rows;
}

}  // namespace

std::vector<BindingRow> execute(const CqlQuery& query, const GraphSnapshot& graph) {
  return finalize(query, Matcher(query, graph).run());
}

std::vector<BindingRow> execute(const CqlQuery& query, const TripleStore& store) {
  const auto snap = store.snapshot();
  return execute(query, *snap);
}

}  // namespace kbqa::graph
