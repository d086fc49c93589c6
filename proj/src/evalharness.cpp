#include "kbqa/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "kbqa/error.hpp"
#include "kbqa/graph/value.hpp"
#include "kbqa/service.hpp"

namespace kbqa {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg, std::size_t line = 0) {
  std::map<std::string, std::string> detail;
  if (line > 0) detail["line"] = std::to_string(line);
  throw Error(Errc::kDatasetInvalid, line > 0 ? "dataset line " + std::to_string(line) + ": " + msg : msg,
              std::move(detail));
}

std::vector<std::string> string_list(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_array()) invalid(std::string("'") + key + "' must be an array", line);
  std::vector<std::string> out;
  for (const auto& v : j.at(key)) {
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      out.push_back(graph::format_number(v.get<double>()));
    } else {
      invalid(std::string("'") + key + "' entries must be strings or numbers", line);
    }
  }
  return out;
}

}  // namespace

std::vector<EvalCase> parse_dataset(std::istream& in) {
  std::vector<EvalCase> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      invalid(std::string("malformed JSON: ") + e.what(), line_no);
    }
    auto str = [&](const char* key, bool required) -> std::string {
      if (!j.contains(key)) {
        if (required) invalid(std::string("missing field '") + key + "'", line_no);
        return {};
      }
      if (!j.at(key).is_string()) invalid(std::string("field '") + key + "' must be a string", line_no);
      return j.at(key).get<std::string>();
    };
    if (!j.is_object()) invalid("record is not an object", line_no);
    EvalCase c;
    c.id = str("id", false);
    if (c.id.empty()) c.id = "case" + std::to_string(cases.size() + 1);
    c.question = str("question", true);
    if (auto lang = str("lang", false); !lang.empty()) {
      try {
        c.lang = parse_lang(lang);
      } catch (const Error& e) {
        invalid(e.what(), line_no);
      }
    }
    c.gold_intent = str("gold_intent", true);
    c.gold_entities = string_list(j, "gold_entities", line_no);
    c.gold_answer_values = string_list(j, "gold_answer_values", line_no);
    if (c.gold_answer_values.empty()) invalid("'gold_answer_values' must not be empty", line_no);
    c.kind = str("kind", true);
    if (c.kind != "simple" && c.kind != "complex") invalid("kind must be simple or complex", line_no);
    c.subset = str("subset", false);
    cases.push_back(std::move(c));
  }
  if (cases.empty()) invalid("dataset is empty");
  return cases;
}

std::vector<EvalCase> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kDatasetInvalid, "cannot read dataset " + path.string(), {{"path", path.string()}});
  return parse_dataset(in);
}

void validate_dataset(const std::vector<EvalCase>& cases, const graph::GraphSnapshot& graph) {
  if (cases.empty()) invalid("dataset is empty");
  std::set<std::string> ids;
  std::set<std::string> nodes;
  for (const auto& v : graph.nodes()) {
    if (v.is_entity()) nodes.insert(v.text());
  }
  for (const auto& c : cases) {
    if (!ids.insert(c.id).second) invalid("duplicate case id '" + c.id + "'");
    for (const auto& e : c.gold_entities) {
      if (!nodes.contains(e)) invalid("case '" + c.id + "': gold entity '" + e + "' is not in the knowledge graph");
    }
  }
}

bool answer_contains(const AnswerPayload& payload, const std::vector<std::string>& gold_values) {
  std::set<std::string> seen;
  for (const auto& row : payload.rows) {
    for (const auto& [_, v] : row.values) seen.insert(v.display());
  }
  for (const auto& g : gold_values) {
    if (!seen.contains(g)) return false;
  }
  return true;
}

EvalResult run_eval(Engine& engine, const std::vector<EvalCase>& cases, const Ablation& ablation) {
  if (cases.empty()) invalid("dataset is empty");
  validate_dataset(cases, *engine.store().snapshot());

  const auto saved_base = engine.intent_base().snapshot();
  const Ablation saved_ablation = engine.ablation();
  engine.sessions().clear();
  engine.set_ablation(ablation);

  const auto embed_before = engine.embedder().call_count();
  const auto llm_before = engine.llm().call_count();

  EvalResult result;
  result.initial_fingerprint = engine.intent_base().fingerprint();
  result.total = cases.size();
  result.tier_counts = {{"rule", 0}, {"embedding", 0}, {"llm", 0}, {"unresolved", 0}};

  try {
    for (const auto& c : cases) {
      CaseOutcome out;
      out.id = c.id;
      out.method = "none";
      std::optional<AskResult> first;
      try {
        first = engine.ask(RawQuestion{c.question, c.lang});
        out.method = std::string(method_name(first->payload.recognition.method));
        out.label = first->payload.recognition.label;
        out.correct = answer_contains(first->payload, c.gold_answer_values);
      } catch (const Error& e) {
        out.error = to_api_error(e).code;
        auto detail = e.detail();
        if (auto it = detail.find("method"); it != detail.end()) out.method = it->second;
        if (auto it = detail.find("intent"); it != detail.end()) out.label = it->second;
      }
      ++result.tier_counts[out.method == "none" ? "unresolved" : out.method];

      // The simulated user only reacts to answers that were actually delivered.
      if (!out.correct && first && !ablation.adapt) {
        try {
          engine.feedback(first->session_id, "satisfied", "false");
          engine.feedback(first->session_id, "cause", "intent");
          engine.feedback(first->session_id, "intent", c.gold_intent);
          const auto again = engine.ask(RawQuestion{c.question, c.lang});
          if (answer_contains(again.payload, c.gold_answer_values)) {
            out.correct = true;
            out.corrected_by_adapt = true;
            ++result.corrected_by_adapt;
          }
        } catch (const Error&) {
          // The retry failing leaves the case incorrect.
        }
      }
      if (out.correct) ++result.correct;
      result.per_case.push_back(std::move(out));
    }
  } catch (...) {
    engine.intent_base().restore(saved_base);
    engine.set_ablation(saved_ablation);
    engine.sessions().clear();
    throw;
  }

  result.tier_counts["embedder_calls"] = engine.embedder().call_count() - embed_before;
  result.tier_counts["llm_calls"] = engine.llm().call_count() - llm_before;
  result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.total);

  engine.intent_base().restore(saved_base);
  engine.set_ablation(saved_ablation);
  engine.sessions().clear();
  return result;
}

std::vector<std::pair<std::string, Ablation>> table_settings() {
  return {{"all", Ablation{}},
          {"w/o rule", Ablation{.rule = true}},
          {"w/o embedding", Ablation{.embedding = true}},
          {"w/o llm", Ablation{.llm = true}},
          {"w/o adapt", Ablation{.adapt = true}}};
}

Ablation parse_ablation(std::string_view flags) {
  Ablation a;
  std::size_t start = 0;
  while (start <= flags.size()) {
    const auto comma = flags.find(',', start);
    std::string_view part = flags.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (part == "rule") {
      a.rule = true;
    } else if (part == "embedding") {
      a.embedding = true;
    } else if (part == "llm") {
      a.llm = true;
    } else if (part == "adapt") {
      a.adapt = true;
    } else if (!part.empty() && part != "none") {
      throw Error(Errc::kInvalidArgument, "unknown ablation flag '" + std::string(part) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return a;
}

std::string setting_name(const Ablation& a) {
  for (const auto& [name, ab] : table_settings()) {
    if (ab == a) return name;
  }
  std::string out = "w/o";
  if (a.rule) out += " rule";
  if (a.embedding) out += " embedding";
  if (a.llm) out += " llm";
  if (a.adapt) out += " adapt";
  return out;
}

std::vector<GridRow> ablation_grid(Engine& engine, const std::vector<EvalCase>& cases,
                                   const std::vector<std::pair<std::string, Ablation>>& settings) {
  std::vector<GridRow> rows;
  for (const auto& [name, ab] : settings) rows.push_back({name, ab, run_eval(engine, cases, ab)});
  return rows;
}

std::string format_grid(const std::vector<GridRow>& rows) {
  int width = 16;
  for (const auto& r : rows) width = std::max(width, static_cast<int>(r.setting.size()));
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %6s %12s\n", width, "setting", "accuracy", "correct", "total",
                "adapt_fixes");
  out += buf;
  for (const auto& r : rows) {
    const auto name = r.setting.substr(0, 128);
    std::snprintf(buf, sizeof buf, "%-*s %8.2f %8zu %6zu %12zu\n", width, name.c_str(), r.result.accuracy,
                  r.result.correct, r.result.total, r.result.corrected_by_adapt);
    out += buf;
  }
  return out;
}

json grid_json(const std::vector<GridRow>& rows, bool with_cases) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = {{"setting", r.setting},
                {"accuracy", r.result.accuracy},
                {"correct", r.result.correct},
                {"total", r.result.total},
                {"corrected_by_adapt", r.result.corrected_by_adapt},
                {"tier_counts", r.result.tier_counts},
                {"initial_fingerprint", r.result.initial_fingerprint}};
    if (with_cases) {
      json cases = json::array();
      for (const auto& c : r.result.per_case) {
        cases.push_back({{"id", c.id},
                         {"correct", c.correct},
                         {"method", c.method},
                         {"label", c.label},
                         {"error", c.error},
                         {"corrected_by_adapt", c.corrected_by_adapt}});
      }
      row["per_case"] = std::move(cases);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace kbqa
