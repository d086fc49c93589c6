#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace kbqa {

/// Flat `key = value` configuration. Relative paths resolve against the
/// directory of the config file; LBKBQA_<KEY> environment variables
/// override file values. Empty paths mean "not loaded".
struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;

  double tau = 0.80;
  bool allow_new_labels = true;

  std::string embedding_provider = "mock";  // mock | remote
  std::string embedding_url;
  std::size_t embedding_dim = 256;

  std::string llm_provider = "scripted";  // scripted | remote | disabled
  std::filesystem::path llm_script;
  std::string llm_url;

  double provider_timeout_seconds = 2.0;

  std::filesystem::path prompts_dir;
  std::filesystem::path stoplist_en;
  std::filesystem::path stoplist_zh;
  std::filesystem::path rules;
  std::filesystem::path seeds;
  std::filesystem::path templates;
  std::filesystem::path triples;
  std::filesystem::path eval_dataset;

  double session_idle_timeout_seconds = 900;

  bool disable_rule = false;
  bool disable_embedding = false;
  bool disable_llm = false;
  bool disable_adapt = false;

  std::string ingest_token;

  /// Throws ConfigError: tau outside [0,1], non-positive timeouts, unknown
  /// provider kinds, missing URLs, or configured paths that do not exist.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Throws ConfigError for unknown keys, malformed lines or bad values.
ServiceConfig parse_config(std::istream& in, const std::filesystem::path& base_dir,
                           const EnvLookup& env = process_env);
ServiceConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

/// Applies one key; the value is parsed and paths resolved against base_dir.
void set_config_key(ServiceConfig& config, const std::string& key, const std::string& value,
                    const std::filesystem::path& base_dir);

/// Configuration pointing at the bundled data directory.
ServiceConfig bundled_config(const std::filesystem::path& data_dir);

}  // namespace kbqa
