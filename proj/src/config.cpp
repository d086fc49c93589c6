#include "kbqa/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>

#include "kbqa/error.hpp"

namespace kbqa {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(Errc::kConfigError, "config key '" + key + "': " + why + " (got '" + value + "')",
              {{"key", key}, {"value", value}});
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad_value(key, v, "expected a boolean");
}

double parse_double(const std::string& key, const std::string& v) {
  double d = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "expected a number");
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long n = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "expected an integer");
  return n;
}

fs::path resolve(const fs::path& base, const std::string& v) {
  if (v.empty()) return {};
  fs::path p(v);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

using Setter = std::function<void(ServiceConfig&, const std::string&, const std::string&, const fs::path&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto path_key = [&t](const std::string& name, fs::path ServiceConfig::*member) {
      t[name] = [member](ServiceConfig& c, const std::string&, const std::string& v, const fs::path& base) {
        c.*member = resolve(base, v);
      };
    };
    auto bool_key = [&t](const std::string& name, bool ServiceConfig::*member) {
      t[name] = [member](ServiceConfig& c, const std::string& k, const std::string& v, const fs::path&) {
        c.*member = parse_bool(k, v);
      };
    };
    auto string_key = [&t](const std::string& name, std::string ServiceConfig::*member) {
      t[name] = [member](ServiceConfig& c, const std::string&, const std::string& v, const fs::path&) {
        c.*member = v;
      };
    };
    auto double_key = [&t](const std::string& name, double ServiceConfig::*member) {
      t[name] = [member](ServiceConfig& c, const std::string& k, const std::string& v, const fs::path&) {
        c.*member = parse_double(k, v);
      };
    };
    string_key("listen_host", &ServiceConfig::listen_host);
    t["listen_port"] = [](ServiceConfig& c, const std::string& k, const std::string& v, const fs::path&) {
      const auto n = parse_int(k, v);
      if (n < 0 || n > 65535) bad_value(k, v, "port out of range");
      c.listen_port = static_cast<int>(n);
    };
    double_key("tau", &ServiceConfig::tau);
    bool_key("allow_new_labels", &ServiceConfig::allow_new_labels);
    string_key("embedding_provider", &ServiceConfig::embedding_provider);
    string_key("embedding_url", &ServiceConfig::embedding_url);
    t["embedding_dim"] = [](ServiceConfig& c, const std::string& k, const std::string& v, const fs::path&) {
      const auto n = parse_int(k, v);
      if (n <= 0) bad_value(k, v, "dimension must be positive");
      c.embedding_dim = static_cast<std::size_t>(n);
    };
    string_key("llm_provider", &ServiceConfig::llm_provider);
    path_key("llm_script", &ServiceConfig::llm_script);
    string_key("llm_url", &ServiceConfig::llm_url);
    double_key("provider_timeout_seconds", &ServiceConfig::provider_timeout_seconds);
    path_key("prompts_dir", &ServiceConfig::prompts_dir);
    path_key("stoplist_en", &ServiceConfig::stoplist_en);
    path_key("stoplist_zh", &ServiceConfig::stoplist_zh);
    path_key("rules", &ServiceConfig::rules);
    path_key("seeds", &ServiceConfig::seeds);
    path_key("templates", &ServiceConfig::templates);
    path_key("triples", &ServiceConfig::triples);
    path_key("eval_dataset", &ServiceConfig::eval_dataset);
    double_key("session_idle_timeout_seconds", &ServiceConfig::session_idle_timeout_seconds);
    bool_key("disable_rule", &ServiceConfig::disable_rule);
    bool_key("disable_embedding", &ServiceConfig::disable_embedding);
    bool_key("disable_llm", &ServiceConfig::disable_llm);
    bool_key("disable_adapt", &ServiceConfig::disable_adapt);
    string_key("ingest_token", &ServiceConfig::ingest_token);
    return t;
  }();
  return table;
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void set_config_key(ServiceConfig& config, const std::string& key, const std::string& value, const fs::path& base_dir) {
  auto it = setters().find(key);
  if (it == setters().end()) throw Error(Errc::kConfigError, "unknown config key '" + key + "'", {{"key", key}});
  it->second(config, key, value, base_dir);
}

ServiceConfig parse_config(std::istream& in, const fs::path& base_dir, const EnvLookup& env) {
  ServiceConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kConfigError, "config line " + std::to_string(line_no) + ": expected key = value",
                  {{"line", std::to_string(line_no)}});
    }
    set_config_key(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), base_dir);
  }
  if (env) {
    // Environment values are relative to the working directory.
    for (const auto& [key, setter] : setters()) {
      std::string name = "LBKBQA_" + key;
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
      if (auto v = env(name)) setter(c, key, trim(*v), fs::current_path());
    }
  }
  return c;
}

ServiceConfig load_config(const fs::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfigError, "cannot read config file " + path.string(), {{"path", path.string()}});
  const fs::path base = fs::absolute(path).parent_path();
  ServiceConfig c = parse_config(in, base, env);
  c.validate();
  return c;
}

void ServiceConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::kConfigError, msg); };
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(provider_timeout_seconds > 0)) fail("provider_timeout_seconds must be positive");
  if (!(session_idle_timeout_seconds > 0)) fail("session_idle_timeout_seconds must be positive");
  if (embedding_provider != "mock" && embedding_provider != "remote") {
    fail("embedding_provider must be 'mock' or 'remote'");
  }
  if (embedding_provider == "remote" && embedding_url.empty()) fail("embedding_url is required for a remote embedder");
  if (llm_provider != "scripted" && llm_provider != "remote" && llm_provider != "disabled") {
    fail("llm_provider must be 'scripted', 'remote' or 'disabled'");
  }
  if (llm_provider == "remote" && llm_url.empty()) fail("llm_url is required for a remote LLM");
  if (embedding_dim == 0) fail("embedding_dim must be positive");
  const std::pair<const char*, const fs::path*> paths[] = {
      {"llm_script", &llm_script}, {"prompts_dir", &prompts_dir}, {"stoplist_en", &stoplist_en},
      {"stoplist_zh", &stoplist_zh}, {"rules", &rules},           {"seeds", &seeds},
      {"templates", &templates},   {"triples", &triples},         {"eval_dataset", &eval_dataset}};
  for (const auto& [key, p] : paths) {
    if (!p->empty() && !fs::exists(*p)) {
      throw Error(Errc::kConfigError, std::string(key) + " path does not exist: " + p->string(),
                  {{"key", key}, {"path", p->string()}});
    }
  }
}

ServiceConfig bundled_config(const fs::path& data_dir) {
  ServiceConfig c;
  c.llm_script = data_dir / "llm_script.jsonl";
  c.prompts_dir = data_dir / "prompts";
  c.stoplist_en = data_dir / "stopwords_en.txt";
  c.stoplist_zh = data_dir / "stopwords_zh.txt";
  c.rules = data_dir / "rules.jsonl";
  c.seeds = data_dir / "seeds.jsonl";
  c.templates = data_dir / "templates.jsonl";
  c.triples = data_dir / "triples.csv";
  c.eval_dataset = data_dir / "eval" / "dataset.jsonl";
  return c;
}

}  // namespace kbqa
