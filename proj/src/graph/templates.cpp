#include "kbqa/graph/templates.hpp"

#include <cctype>
#include <set>

#include "kbqa/error.hpp"
#include "kbqa/graph/cql.hpp"

namespace kbqa::graph {

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Placeholder {
  std::size_t begin;
  std::size_t end;
  std::size_t index;
};

std::vector<Placeholder> scan(std::string_view s) {
  std::vector<Placeholder> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '"') {
      // Skip the literal, honoring backslash escapes.
      for (++i; i < s.size() && s[i] != '"'; ++i) {
        if (s[i] == '\\') ++i;
      }
      ++i;
      continue;
    }
    if (!ident_char(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && ident_char(s[j])) ++j;
    const std::string_view word = s.substr(i, j - i);
    if (word.size() >= 2 && word.substr(0, 2) == "XX") {
      const std::string_view digits = word.substr(2);
      const bool numeric = !digits.empty() && digits.size() <= 6 &&
                           digits.find_first_not_of("0123456789") == std::string_view::npos &&
                           digits[0] != '0';
      if (digits.empty()) {
        out.push_back({i, j, 1});
      } else if (numeric) {
        out.push_back({i, j, std::stoul(std::string(digits))});
      }
    }
    i = j;
  }
  return out;
}

std::string substitute(std::string_view text, const std::vector<std::string>& values) {
  std::string out;
  std::size_t at = 0;
  for (const auto& p : scan(text)) {
    out.append(text.substr(at, p.begin - at));
    out += quote_string(values[p.index - 1]);
    at = p.end;
  }
  out.append(text.substr(at));
  return out;
}

}  // namespace

std::vector<std::size_t> placeholder_indices(std::string_view cql_text) {
  std::set<std::size_t> seen;
  for (const auto& p : scan(cql_text)) seen.insert(p.index);
  return {seen.begin(), seen.end()};
}

QueryTemplate make_template(std::string intent_label, std::string cql_text, std::size_t arity) {
  if (intent_label.empty()) throw Error(Errc::kInvalidArgument, "template intent label is empty");
  const auto indices = placeholder_indices(cql_text);
  bool contiguous = indices.size() == arity;
  for (std::size_t i = 0; contiguous && i < indices.size(); ++i) contiguous = indices[i] == i + 1;
  if (!contiguous) {
    std::string found;
    for (auto i : indices) found += (found.empty() ? "XX" : ", XX") + std::to_string(i);
    throw Error(Errc::kArityDeclarationMismatch,
                "declared arity " + std::to_string(arity) + " but placeholders are {" + found + "}",
                {{"declared", std::to_string(arity)}, {"placeholders", std::to_string(indices.size())}});
  }
  std::vector<std::string> probes;
  for (std::size_t i = 1; i <= arity; ++i) probes.push_back("probe" + std::to_string(i));
  parse_cql(substitute(cql_text, probes));
  return QueryTemplate{std::move(intent_label), std::move(cql_text), arity};
}

std::string fill_template(const QueryTemplate& t, const std::vector<std::string>& entities) {
  if (entities.size() != t.arity) {
    throw Error(Errc::kArityMismatch,
                "intent '" + t.intent_label + "' needs " + std::to_string(t.arity) + " entities, got " +
                    std::to_string(entities.size()),
                {{"expected", std::to_string(t.arity)},
                 {"got", std::to_string(entities.size())},
                 {"intent", t.intent_label}});
  }
  return substitute(t.cql_text, entities);
}

bool TemplateLibrary::put(QueryTemplate t) {
  std::unique_lock lock(mu_);
  std::string key = t.intent_label;
  const bool replaced = by_label_.contains(key);
  by_label_.insert_or_assign(std::move(key), std::move(t));
  return replaced;
}

std::optional<QueryTemplate> TemplateLibrary::find(const std::string& intent_label) const {
  std::shared_lock lock(mu_);
  auto it = by_label_.find(intent_label);
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TemplateLibrary::labels() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [label, _] : by_label_) out.push_back(label);
  return out;
}

std::size_t TemplateLibrary::size() const {
  std::shared_lock lock(mu_);
  return by_label_.size();
}

void TemplateLibrary::clear() {
  std::unique_lock lock(mu_);
  by_label_.clear();
}

}  // namespace kbqa::graph
