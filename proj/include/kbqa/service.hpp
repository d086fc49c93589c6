#pragma once

#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "kbqa/engine.hpp"
#include "kbqa/error.hpp"

namespace httplib {
class Server;
}

namespace kbqa {

/// Wire form of an error: stable code, HTTP status, message and detail.
struct ApiError {
  std::string code;
  int http_status = 500;
  std::string message;
  std::map<std::string, std::string> detail;
};

ApiError to_api_error(const Error& e);
nlohmann::json api_error_json(const ApiError& e);

nlohmann::json value_json(const graph::Value& v);
nlohmann::json answer_json(const AskResult& result);
nlohmann::json feedback_json(const FeedbackResult& result);
nlohmann::json ingest_report_json(const IngestReport& report);
nlohmann::json intents_json(const std::map<std::string, std::size_t>& counts);
nlohmann::json health_json(const Health& health);

/// JSON-over-HTTP front end for an Engine. Endpoints:
///   POST /ask, POST /feedback, POST /ingest/{kind}, GET /intents, GET /healthz
class Service {
 public:
  /// An empty ingest token disables the ingest endpoints (always 401).
  Service(Engine& engine, std::string ingest_token);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Blocks serving until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  Engine& engine_;
  std::string ingest_token_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace kbqa
