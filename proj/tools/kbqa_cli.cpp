// Operator CLI: serve, ask, ingest, eval.
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "kbqa/config.hpp"
#include "kbqa/engine.hpp"
#include "kbqa/error.hpp"
#include "kbqa/evalharness.hpp"
#include "kbqa/service.hpp"

namespace {

constexpr int kExitApiError = 1;
constexpr int kExitConfigError = 2;

kbqa::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

kbqa::ServiceConfig resolve_config(const std::string& path) {
  if (!path.empty()) return kbqa::load_config(path);
  return kbqa::load_config(std::filesystem::path(KBQA_DATA_DIR) / "kbqa.conf");
}

void print_startup(const kbqa::Engine& engine) {
  for (const auto& [kind, r] : engine.startup_reports()) {
    std::cerr << "loaded " << kind << ": " << r.loaded << " ok, " << r.rejected << " rejected\n";
    for (const auto& e : r.errors) std::cerr << "  line " << e.line << ": " << e.reason << "\n";
  }
}

int run_serve(const std::string& config_path) {
  const auto config = resolve_config(config_path);
  auto engine = kbqa::Engine::from_config(config);
  print_startup(*engine);
  kbqa::Service service(*engine, config.ingest_token);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << config.listen_host << ":" << config.listen_port << "\n";
  if (!service.listen(config.listen_host, config.listen_port)) {
    g_service = nullptr;
    throw kbqa::Error(kbqa::Errc::kConfigError, "cannot listen on " + config.listen_host + ":" +
                                                    std::to_string(config.listen_port));
  }
  g_service = nullptr;
  return 0;
}

int run_ask(const std::string& config_path, const std::string& question, const std::string& lang) {
  const auto config = resolve_config(config_path);
  auto engine = kbqa::Engine::from_config(config);
  const auto result = engine->ask({question, kbqa::parse_lang(lang)});
  std::cout << kbqa::answer_json(result).dump(2) << "\n";
  return 0;
}

int run_ingest(const std::string& config_path, const std::string& kind_name, const std::string& file,
               const std::string& url, const std::string& token) {
  const auto kind = kbqa::parse_ingest_kind(kind_name);
  if (!url.empty()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw kbqa::Error(kbqa::Errc::kFileUnreadable, "cannot read " + file);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    httplib::Client client(url);
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    httplib::MultipartFormDataItems items{
        {"file", content, std::filesystem::path(file).filename().string(), "application/octet-stream"}};
    auto res = client.Post("/ingest/" + kind_name, headers, items);
    if (!res) throw kbqa::Error(kbqa::Errc::kProviderUnavailable, "cannot reach " + url);
    std::cout << res->body << "\n";
    return res->status == 200 ? 0 : kExitApiError;
  }
  // Without a server, check the file against a freshly loaded engine.
  const auto config = resolve_config(config_path);
  auto engine = kbqa::Engine::from_config(config);
  const auto report = engine->ingest_file(kind, file);
  std::cout << kbqa::ingest_report_json(report).dump(2) << "\n";
  return 0;
}

int run_eval(const std::string& config_path, std::string dataset, const std::string& ablation,
             const std::string& json_out, bool with_cases) {
  const auto config = resolve_config(config_path);
  auto engine = kbqa::Engine::from_config(config);
  if (dataset.empty()) dataset = config.eval_dataset.string();
  if (dataset.empty()) throw kbqa::Error(kbqa::Errc::kConfigError, "no dataset given and none configured");
  const auto cases = kbqa::load_dataset(dataset);

  std::vector<kbqa::GridRow> rows;
  if (ablation.empty() || ablation == "grid") {
    rows = kbqa::ablation_grid(*engine, cases);
  } else {
    const auto ab = kbqa::parse_ablation(ablation);
    rows = kbqa::ablation_grid(*engine, cases, {{kbqa::setting_name(ab), ab}});
  }
  std::cout << kbqa::format_grid(rows);
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw kbqa::Error(kbqa::Errc::kFileUnreadable, "cannot write " + json_out);
    out << kbqa::grid_json(rows, with_cases).dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph question answering engine"};
  app.require_subcommand(1);
  std::string config_path;

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--config", config_path, "Config file (defaults to the bundled one)");

  std::string question, lang = "en";
  auto* ask = app.add_subcommand("ask", "Answer one question and print the answer view as JSON");
  ask->add_option("--question,-q", question, "Question text")->required();
  ask->add_option("--lang", lang, "en or zh");
  ask->add_option("--config", config_path, "Config file");

  std::string kind, file, url, token;
  auto* ingest = app.add_subcommand("ingest", "Load a data file (locally, or into a running service with --url)");
  ingest->add_option("kind", kind, "triples, seeds, templates or rules")->required();
  ingest->add_option("file", file, "Data file")->required();
  ingest->add_option("--config", config_path, "Config file");
  ingest->add_option("--url", url, "Service base URL, e.g. http://127.0.0.1:8080");
  ingest->add_option("--token", token, "Bearer token for --url");

  std::string dataset, ablation, json_out;
  bool with_cases = false;
  auto* eval = app.add_subcommand("eval", "Run the evaluation corpus and print the accuracy table");
  eval->add_option("--dataset", dataset, "Eval dataset (JSON Lines)");
  eval->add_option("--ablation", ablation, "Comma-separated tiers to disable, 'none', or 'grid' (default)");
  eval->add_option("--json", json_out, "Also write the machine-readable report here");
  eval->add_flag("--cases", with_cases, "Include per-case outcomes in the JSON report");
  eval->add_option("--config", config_path, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*serve) return run_serve(config_path);
    if (*ask) return run_ask(config_path, question, lang);
    if (*ingest) return run_ingest(config_path, kind, file, url, token);
    if (*eval) return run_eval(config_path, dataset, ablation, json_out, with_cases);
  } catch (const kbqa::Error& e) {
    if (e.code() == kbqa::Errc::kConfigError) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfigError;
    }
    const auto api = kbqa::to_api_error(e);
    std::cerr << kbqa::api_error_json(api).dump() << "\n";
    return kExitApiError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitApiError;
  }
  return 0;
}
