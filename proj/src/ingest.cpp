#include "kbqa/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "kbqa/error.hpp"
#include "kbqa/unicode_text.hpp"

namespace kbqa {

using graph::Triple;
using graph::Value;
using nlohmann::json;

IngestKind parse_ingest_kind(std::string_view name) {
  if (name == "triples") return IngestKind::kTriples;
  if (name == "seeds") return IngestKind::kSeeds;
  if (name == "templates") return IngestKind::kTemplates;
  if (name == "rules") return IngestKind::kRules;
  throw Error(Errc::kInvalidArgument, "unknown ingest kind '" + std::string(name) + "'",
              {{"kind", std::string(name)}});
}

std::string_view ingest_kind_name(IngestKind kind) {
  switch (kind) {
    case IngestKind::kTriples: return "triples";
    case IngestKind::kSeeds: return "seeds";
    case IngestKind::kTemplates: return "templates";
    case IngestKind::kRules: return "rules";
  }
  return "triples";
}

namespace {

// Extensions compare case-insensitively so DATA.CSV loads like data.csv.
std::string extension_of(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return ext;
}

}  // namespace

TripleFormat triple_format_for(const std::filesystem::path& path) {
  const auto ext = extension_of(path);
  if (ext == ".csv") return TripleFormat::kCsv;
  if (ext == ".jsonl") return TripleFormat::kJsonl;
  throw Error(Errc::kUnknownFormat, "unsupported triple file extension '" + ext + "' (use .csv or .jsonl)",
              {{"extension", ext}});
}

void require_jsonl(const std::filesystem::path& path) {
  const auto ext = extension_of(path);
  if (ext != ".jsonl") {
    throw Error(Errc::kUnknownFormat, "expected a .jsonl file, got '" + ext + "'", {{"extension", ext}});
  }
}

std::vector<CsvRecord> parse_csv(std::string_view text) {
  std::vector<CsvRecord> out;
  CsvRecord rec{1, {}};
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  bool any = false;  // current record has content
  std::size_t line = 1;

  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    if (any || !rec.fields.empty()) {
      end_field();
      out.push_back(std::move(rec));
    }
    rec = CsvRecord{line, {}};
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !was_quoted) {
          quoted = was_quoted = true;
          any = true;
        } else {
          field.push_back(c);  // stray quote inside an unquoted field is kept
        }
        break;
      case ',':
        any = true;
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        field.push_back(c);
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        any = true;
        field.push_back(c);
    }
  }
  end_record();
  return out;
}

namespace {

std::string read_all(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ifstream open_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileUnreadable, "cannot read " + path.string(), {{"path", path.string()}});
  return in;
}

void reject(IngestReport& r, std::size_t line, std::string reason) {
  ++r.rejected;
  r.errors.push_back({line, std::move(reason)});
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Value make_object(const std::string& text, const std::string& type) {
  if (type == "entity") return Value::entity(text);
  if (type == "string") return Value::string(text);
  if (type == "number") {
    const std::string t = trim(text);
    double v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
      throw Error(Errc::kInvalidTriple, "invalid number '" + text + "'");
    }
    return Value::number(v);
  }
  throw Error(Errc::kInvalidTriple, "unknown object_type '" + type + "'");
}

void add_triple(IngestReport& r, std::size_t line, graph::TripleStore& store, Triple t) {
  try {
    if (store.insert(std::move(t))) ++r.added;
    ++r.loaded;
  } catch (const Error& e) {
    reject(r, line, e.what());
  }
}

// Calls fn(line_no, parsed) for every non-blank line; JSON and schema errors
// become rejections.
template <typename Fn>
IngestReport for_each_json_line(std::istream& in, Fn&& fn) {
  IngestReport r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!text::is_valid_utf8(line)) {
      reject(r, line_no, "invalid UTF-8");
      continue;
    }
    try {
      fn(r, line_no, json::parse(line));
    } catch (const json::exception& e) {
      reject(r, line_no, std::string("malformed record: ") + e.what());
    } catch (const Error& e) {
      reject(r, line_no, e.what());
    }
  }
  return r;
}

std::string required_string(const json& j, const char* key) {
  if (!j.is_object()) throw Error(Errc::kMalformedLine, "record is not a JSON object");
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(Errc::kMalformedLine, std::string("missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

IngestReport load_triples(std::istream& in, TripleFormat format, graph::TripleStore& store) {
  if (format == TripleFormat::kJsonl) {
    return for_each_json_line(in, [&](IngestReport& r, std::size_t line, const json& j) {
      const std::string s = required_string(j, "s");
      const std::string p = required_string(j, "p");
      const std::string t = required_string(j, "t");
      if (!j.contains("o")) throw Error(Errc::kMalformedLine, "missing field 'o'");
      const json& o = j.at("o");
      Value obj;
      if (o.is_number() && t == "number") {
        obj = Value::number(o.get<double>());
      } else if (o.is_string()) {
        obj = make_object(o.get<std::string>(), t);
      } else {
        throw Error(Errc::kMalformedLine, "field 'o' must be a string or number");
      }
      add_triple(r, line, store, Triple{s, p, std::move(obj)});
    });
  }

  IngestReport r;
  const std::string text = read_all(in);
  bool first = true;
  for (auto& rec : parse_csv(text)) {
    if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;
    if (first) {
      first = false;
      if (rec.fields.size() == 4 && trim(rec.fields[0]) == "subject" && trim(rec.fields[1]) == "predicate" &&
          trim(rec.fields[2]) == "object" && trim(rec.fields[3]) == "object_type") {
        continue;
      }
    }
    bool utf8 = true;
    for (const auto& f : rec.fields) utf8 = utf8 && text::is_valid_utf8(f);
    if (!utf8) {
      reject(r, rec.line, "invalid UTF-8");
      continue;
    }
    if (rec.fields.size() != 4) {
      reject(r, rec.line, "expected 4 fields (subject,predicate,object,object_type), got " +
                              std::to_string(rec.fields.size()));
      continue;
    }
    try {
      Value obj = make_object(rec.fields[2], trim(rec.fields[3]));
      add_triple(r, rec.line, store, Triple{rec.fields[0], rec.fields[1], std::move(obj)});
    } catch (const Error& e) {
      reject(r, rec.line, e.what());
    }
  }
  return r;
}

IngestReport load_triples(const std::filesystem::path& path, graph::TripleStore& store) {
  const auto format = triple_format_for(path);
  auto in = open_file(path);
  return load_triples(in, format, store);
}

IngestReport load_intent_seeds(std::istream& in, IntentBase& base, const Embedder& embedder, const Cleaner& clean) {
  return for_each_json_line(in, [&](IngestReport& r, std::size_t, const json& j) {
    const std::string label = required_string(j, "label");
    if (slugify_label(label) != label || label.empty()) {
      throw Error(Errc::kInvalidLabel, "label '" + label + "' is not a normalized intent label");
    }
    if (!j.contains("examples") || !j.at("examples").is_array() || j.at("examples").empty()) {
      throw Error(Errc::kMalformedLine, "'examples' must be a non-empty array");
    }
    const Lang lang = j.contains("lang") ? parse_lang(j.at("lang").get<std::string>()) : Lang::kEn;
    // Everything is cleaned and embedded before the base is touched.
    std::vector<std::pair<std::string, EmbeddingVector>> prepared;
    for (const auto& ex : j.at("examples")) {
      if (!ex.is_string()) throw Error(Errc::kMalformedLine, "examples must be strings");
      const CleanQuestion cq = clean(RawQuestion{ex.get<std::string>(), lang});
      prepared.emplace_back(cq.text, embedder.embed(cq.text));
    }
    for (const auto& [text, vec] : prepared) {
      if (base.upsert(label, text, vec)) ++r.added;
    }
    ++r.loaded;
  });
}

IngestReport load_intent_seeds(const std::filesystem::path& path, IntentBase& base, const Embedder& embedder,
                               const Cleaner& clean) {
  require_jsonl(path);
  auto in = open_file(path);
  return load_intent_seeds(in, base, embedder, clean);
}

IngestReport load_templates(std::istream& in, graph::TemplateLibrary& library) {
  std::map<std::string, std::size_t> seen_at;
  return for_each_json_line(in, [&](IngestReport& r, std::size_t line, const json& j) {
    const std::string intent = required_string(j, "intent");
    const std::string cql = required_string(j, "cql");
    if (!j.contains("arity") || !j.at("arity").is_number_unsigned()) {
      throw Error(Errc::kMalformedLine, "'arity' must be a non-negative integer");
    }
    auto t = graph::make_template(intent, cql, j.at("arity").get<std::size_t>());
    const auto before = library.find(intent);
    library.put(std::move(t));
    if (before && !(*before == *library.find(intent))) ++r.added;
    if (!before) ++r.added;
    if (auto it = seen_at.find(intent); it != seen_at.end()) {
      r.notes.push_back("line " + std::to_string(line) + ": template for '" + intent + "' replaces line " +
                        std::to_string(it->second));
    } else if (before) {
      r.notes.push_back("line " + std::to_string(line) + ": template for '" + intent +
                        "' replaces the previously registered one");
    }
    seen_at[intent] = line;
    ++r.loaded;
  });
}

IngestReport load_templates(const std::filesystem::path& path, graph::TemplateLibrary& library) {
  require_jsonl(path);
  auto in = open_file(path);
  return load_templates(in, library);
}

IngestReport load_rules(std::istream& in, std::vector<IntentRule>& rules) {
  return for_each_json_line(in, [&](IngestReport& r, std::size_t, const json& j) {
    const std::string label = required_string(j, "label");
    std::vector<std::set<std::string>> groups;
    if (j.contains("keyword_groups") && !j.at("keyword_groups").is_null()) {
      for (const auto& g : j.at("keyword_groups")) {
        std::set<std::string> group;
        for (const auto& w : g) group.insert(w.get<std::string>());
        groups.push_back(std::move(group));
      }
    }
    std::optional<std::string> pattern;
    if (j.contains("pattern") && !j.at("pattern").is_null()) pattern = j.at("pattern").get<std::string>();
    IntentRule rule(label, std::move(groups), std::move(pattern));
    const bool dup = std::any_of(rules.begin(), rules.end(), [&](const IntentRule& o) {
      return o.label() == rule.label() && o.keyword_groups() == rule.keyword_groups() && o.pattern() == rule.pattern();
    });
    if (!dup) {
      rules.push_back(std::move(rule));
      ++r.added;
    }
    ++r.loaded;
  });
}

IngestReport load_rules(const std::filesystem::path& path, std::vector<IntentRule>& rules) {
  require_jsonl(path);
  auto in = open_file(path);
  return load_rules(in, rules);
}

}  // namespace kbqa
