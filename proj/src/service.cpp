#include "kbqa/service.hpp"

#include <sstream>

#include <httplib.h>

namespace kbqa {

using nlohmann::json;

ApiError to_api_error(const Error& e) {
  ApiError a{"internal", 500, e.what(), e.detail()};
  switch (e.code()) {
    case Errc::kEmptyInput: a.code = "empty_input"; a.http_status = 400; break;
    case Errc::kInputTooLong: a.code = "input_too_long"; a.http_status = 400; break;
    case Errc::kUnresolvedIntent: {
      a.code = "unresolved_intent";
      auto it = e.detail().find("cause");
      a.http_status = it != e.detail().end() && it->second == "provider_unavailable" ? 503 : 400;
      break;
    }
    case Errc::kNoTemplateForIntent: a.code = "no_template"; a.http_status = 400; break;
    case Errc::kArityMismatch: a.code = "arity_mismatch"; a.http_status = 400; break;
    case Errc::kWrongState: a.code = "wrong_state"; a.http_status = 409; break;
    case Errc::kUnknownSession: a.code = "not_found"; a.http_status = 404; break;
    case Errc::kInvalidLabel: a.code = "invalid_label"; a.http_status = 400; break;
    case Errc::kInvalidArgument:
    case Errc::kMalformedLine: a.code = "invalid_request"; a.http_status = 400; break;
    case Errc::kUnknownFormat: a.code = "unsupported_format"; a.http_status = 415; break;
    case Errc::kProviderUnavailable: a.code = "provider_unavailable"; a.http_status = 503; break;
    default: break;
  }
  return a;
}

json api_error_json(const ApiError& e) {
  json detail = json::object();
  for (const auto& [k, v] : e.detail) detail[k] = v;
  return {{"error", {{"code", e.code}, {"message", e.message}, {"detail", detail}}}};
}

json value_json(const graph::Value& v) {
  switch (v.kind()) {
    case graph::ValueKind::kNull: return nullptr;
    case graph::ValueKind::kNumber: return v.as_number();
    default: return v.text();
  }
}

json answer_json(const AskResult& result) {
  const auto& p = result.payload;
  json columns = json::array();
  if (!p.rows.empty()) {
    for (const auto& [name, _] : p.rows.front().values) columns.push_back(name);
  }
  json rows = json::array();
  for (const auto& row : p.rows) {
    json r = json::object();
    for (const auto& [name, v] : row.values) r[name] = value_json(v);
    rows.push_back(std::move(r));
  }
  json trace = json::array();
  for (const auto& t : p.trace) trace.push_back({{"stage", t.stage}, {"outcome", t.outcome}});
  const auto& rec = p.recognition;
  json recognition = {{"label", rec.label},
                      {"method", method_name(rec.method)},
                      {"score", rec.score},
                      {"is_new_intent", rec.is_new_intent},
                      {"matched_example", rec.matched_record ? json(rec.matched_record->example_text) : json(nullptr)},
                      {"explanation", rec.explanation}};
  return {{"session_id", result.session_id},
          {"answer",
           {{"answer_text", p.answer_text},
            {"render_method", render_method_name(p.render_method)},
            {"recognition", recognition},
            {"cql", p.cql},
            {"columns", columns},
            {"rows", rows},
            {"entities", p.entities},
            {"clean_question", p.question.text},
            {"trace", trace}}}};
}

json feedback_json(const FeedbackResult& result) {
  json out = {{"session_id", result.session_id},
              {"state", state_name(result.turn.state)},
              {"prompt", result.turn.prompt}};
  if (result.turn.stored_label) {
    out["confirmation"] = result.turn.prompt;
    out["stored_label"] = *result.turn.stored_label;
  }
  return out;
}

json ingest_report_json(const IngestReport& report) {
  json errors = json::array();
  for (const auto& e : report.errors) errors.push_back({{"line", e.line}, {"reason", e.reason}});
  return {{"loaded", report.loaded},
          {"rejected", report.rejected},
          {"added", report.added},
          {"errors", errors},
          {"notes", report.notes}};
}

json intents_json(const std::map<std::string, std::size_t>& counts) {
  json list = json::array();
  for (const auto& [label, n] : counts) list.push_back({{"label", label}, {"example_count", n}});
  return {{"intents", list}};
}

json health_json(const Health& h) {
  return {{"status", h.status},
          {"providers",
           {{"embedder", {{"id", h.embedder.id}, {"status", h.embedder.status}}},
            {"llm", {{"id", h.llm.id}, {"status", h.llm.status}}}}}};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, const ApiError& e) { send_json(res, e.http_status, api_error_json(e)); }

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(Errc::kInvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string string_field(const json& j, const char* key, bool required) {
  if (!j.contains(key) || j.at(key).is_null()) {
    if (required) throw Error(Errc::kInvalidArgument, std::string("missing field '") + key + "'", {{"field", key}});
    return {};
  }
  if (!j.at(key).is_string()) {
    throw Error(Errc::kInvalidArgument, std::string("field '") + key + "' must be a string", {{"field", key}});
  }
  return j.at(key).get<std::string>();
}

// Runs a handler, mapping engine errors to API errors.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, to_api_error(e));
  } catch (const std::exception& e) {
    send_error(res, ApiError{"internal", 500, e.what(), {}});
  }
}

}  // namespace

Service::Service(Engine& engine, std::string ingest_token)
    : engine_(engine), ingest_token_(std::move(ingest_token)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
  server_->Post("/ask", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      RawQuestion q;
      q.text = string_field(body, "question", true);
      const std::string lang = string_field(body, "lang", false);
      if (!lang.empty()) q.lang = parse_lang(lang);
      std::optional<std::string> session;
      if (auto s = string_field(body, "session_id", false); !s.empty()) session = s;
      send_json(res, 200, answer_json(engine_.ask(q, session)));
    });
  });

  server_->Post("/feedback", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const std::string session = string_field(body, "session_id", true);
      const std::string step = string_field(body, "step", true);
      if (!body.contains("value")) throw Error(Errc::kInvalidArgument, "missing field 'value'", {{"field", "value"}});
      const json& v = body.at("value");
      std::string value;
      if (v.is_boolean()) {
        value = v.get<bool>() ? "true" : "false";
      } else if (v.is_string()) {
        value = v.get<std::string>();
      } else {
        throw Error(Errc::kInvalidArgument, "field 'value' must be a string or boolean", {{"field", "value"}});
      }
      send_json(res, 200, feedback_json(engine_.feedback(session, step, value)));
    });
  });

  server_->Post(R"(/ingest/([a-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string auth = req.get_header_value("Authorization");
      if (ingest_token_.empty() || auth != "Bearer " + ingest_token_) {
        send_error(res, ApiError{"unauthorized", 401, "a valid bearer token is required", {}});
        return;
      }
      const IngestKind kind = parse_ingest_kind(req.matches[1].str());
      std::string filename;
      std::string content;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) throw Error(Errc::kInvalidArgument, "multipart field 'file' is required");
        const auto file = req.get_file_value("file");
        filename = file.filename;
        content = file.content;
      } else {
        filename = req.get_param_value("filename");
        content = req.body;
      }
      std::istringstream in(content);
      send_json(res, 200, ingest_report_json(engine_.ingest(kind, in, filename)));
    });
  });

  server_->Get("/intents", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, intents_json(engine_.intent_counts())); });
  });

  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, health_json(engine_.health())); });
  });
}

bool Service::listen(const std::string& host, int port) { return server_->listen(host, port); }

int Service::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool Service::listen_after_bind() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace kbqa
