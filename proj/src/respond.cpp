#include "kbqa/respond.hpp"

#include <algorithm>
#include <set>

#include "kbqa/error.hpp"
#include "kbqa/graph/cql.hpp"

namespace kbqa {

using graph::BindingRow;
using graph::Value;

void EntityLexicon::add(const std::vector<std::string>& tokens, const std::string& entity_id) {
  if (tokens.empty() || entity_id.empty()) return;
  entries_.emplace(join_tokens(tokens), entity_id);
  max_tokens_ = std::max(max_tokens_, tokens.size());
}

EntityLexicon build_lexicon(const graph::GraphSnapshot& graph, const std::vector<const StopwordList*>& stoplists) {
  // Surfaces are gathered first so CJK names can be merged while keying.
  std::vector<std::pair<std::string, std::string>> surfaces;
  std::set<std::string> ids;
  for (const auto& t : graph.triples()) {
    ids.insert(t.subject);
    if (t.object.is_entity()) ids.insert(t.object.text());
  }
  for (const auto& id : ids) surfaces.emplace_back(id, id);
  for (const auto& t : graph.triples()) {
    if ((t.predicate == "name" || t.predicate == "alias") && !t.object.is_null() && !t.object.is_number()) {
      surfaces.emplace_back(t.object.text(), t.subject);
    }
  }

  EntityLexicon lex;
  for (const auto& [surface, id] : surfaces) lex.add_merge_form(surface);
  for (const auto& [surface, id] : surfaces) {
    for (Lang lang : {Lang::kEn, Lang::kZh}) {
      const auto tokens = tokenize(surface, lang, &lex.merge());
      lex.add(tokens, id);
      for (const StopwordList* stop : stoplists) {
        if (stop == nullptr) continue;
        std::vector<std::string> kept;
        for (const auto& tok : tokens) {
          if (!stop->contains(tok)) kept.push_back(tok);
        }
        lex.add(kept, id);
      }
    }
  }
  return lex;
}

std::vector<std::string> extract_entities(const CleanQuestion& clean, const EntityLexicon& lexicon) {
  std::vector<std::string> found;
  const auto& tokens = clean.tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t matched = 0;
    const std::size_t longest = std::min(lexicon.max_tokens(), tokens.size() - i);
    for (std::size_t len = longest; len >= 1 && matched == 0; --len) {
      std::string key = tokens[i];
      for (std::size_t k = 1; k < len; ++k) key += " " + tokens[i + k];
      auto it = lexicon.entries().find(key);
      if (it != lexicon.entries().end()) {
        found.push_back(it->second);
        matched = len;
      }
    }
    i += matched == 0 ? 1 : matched;
  }
  return found;
}

std::string_view render_method_name(RenderMethod m) {
  return m == RenderMethod::kLlm ? "llm" : "template_fallback";
}

std::string serialize_rows(const std::vector<BindingRow>& rows) {
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r > 0) out.push_back('\n');
    for (std::size_t i = 0; i < rows[r].values.size(); ++i) {
      if (i > 0) out += "; ";
      out += rows[r].values[i].first + "=" + rows[r].values[i].second.display();
    }
  }
  return out;
}

namespace {

// Column positions of the two endpoints when the query is one edge whose
// endpoints are both returned as plain variables.
struct TripleShape {
  std::size_t subject_col;
  std::size_t object_col;
  std::string predicate;
};

std::optional<TripleShape> triple_shape(const graph::CqlQuery& q) {
  if (q.patterns.size() != 1 || q.patterns[0].steps.size() != 1) return std::nullopt;
  const auto& p = q.patterns[0];
  const auto& step = p.steps[0];
  if (!step.relation || !p.start.variable || !step.node.variable) return std::nullopt;
  std::string src = *p.start.variable;
  std::string dst = *step.node.variable;
  if (step.direction == graph::Direction::kIn) std::swap(src, dst);
  std::optional<std::size_t> s, o;
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (q.items[i].kind != graph::ReturnItem::Kind::kVariable) return std::nullopt;
    if (q.items[i].variable == src) s = i;
    if (q.items[i].variable == dst) o = i;
  }
  if (!s || !o || q.items.size() != 2) return std::nullopt;
  return TripleShape{*s, *o, *step.relation};
}

}  // namespace

std::string render_fallback(const graph::CqlQuery& query, const std::vector<BindingRow>& rows) {
  if (rows.empty()) return "No matching knowledge was found for this question.";
  std::string out;
  const auto shape = triple_shape(query);
  for (const auto& row : rows) {
    if (!out.empty()) out.push_back('\n');
    if (shape) {
      out += row.values[shape->subject_col].second.display() + " \xE2\x80\x94" + shape->predicate + "\xE2\x86\x92 " +
             row.values[shape->object_col].second.display();
      continue;
    }
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (i > 0) out += "; ";
      out += row.values[i].first + " = " + row.values[i].second.display();
    }
  }
  return out;
}

AnswerPayload answer(const RawQuestion& raw, const AnswerDeps& deps) {
  AnswerPayload out;
  out.question = clean(raw, deps.stoplist, &deps.lexicon.merge());
  out.trace.push_back({"clean", out.question.text});

  out.recognition = recognize(out.question, deps.base, deps.cascade, deps.tiers);
  const auto& rec = out.recognition;
  out.trace.push_back({"recognize", std::string(method_name(rec.method)) + " -> " + rec.label + " (" +
                                        graph::format_number(rec.score) + "); " + rec.explanation});

  // Later failures still report what the cascade resolved.
  auto annotate = [&](const Error& e) {
    auto detail = e.detail();
    detail.emplace("intent", rec.label);
    detail.emplace("method", std::string(method_name(rec.method)));
    return Error(e.code(), e.what(), std::move(detail));
  };

  try {
    const auto tmpl = deps.templates.find(rec.label);
    if (!tmpl) {
      throw Error(Errc::kNoTemplateForIntent, "no query template is registered for intent '" + rec.label + "'");
    }
    out.trace.push_back({"template", tmpl->cql_text});

    out.entities = extract_entities(out.question, deps.lexicon);
    std::string names;
    for (const auto& e : out.entities) names += (names.empty() ? "" : ", ") + e;
    out.trace.push_back({"ner", names.empty() ? "no entities" : names});

    out.cql = graph::fill_template(*tmpl, out.entities);
    out.trace.push_back({"fill", out.cql});

    const auto query = graph::parse_cql(out.cql);
    out.rows = graph::execute(query, deps.graph);
    out.trace.push_back({"execute", std::to_string(out.rows.size()) + " row(s)"});

    if (deps.renderer != nullptr && !out.rows.empty()) {
      try {
        auto reply = deps.renderer->complete(
            {PromptTemplateId::kAnswerRender, {{"question", raw.text}, {"knowledge", serialize_rows(out.rows)}}});
        out.answer_text = std::move(reply.text);
        out.render_method = RenderMethod::kLlm;
        out.trace.push_back({"render", "llm " + reply.provider_id});
        return out;
      } catch (const Error& e) {
        if (e.code() != Errc::kProviderUnavailable) throw;
        out.trace.push_back({"render", std::string("llm unavailable: ") + e.what() + "; using fallback"});
      }
    }
    out.answer_text = render_fallback(query, out.rows);
    out.render_method = RenderMethod::kTemplateFallback;
    if (deps.renderer == nullptr || out.rows.empty()) out.trace.push_back({"render", "template_fallback"});
    return out;
  } catch (const Error& e) {
    throw annotate(e);
  }
}

}  // namespace kbqa
