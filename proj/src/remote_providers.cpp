#include <algorithm>
#include <mutex>

#include <httplib.h>
#include <json.hpp>

#include "kbqa/error.hpp"
#include "kbqa/providers.hpp"

namespace kbqa {

/// Keeps idle keep-alive clients for one endpoint; a client is used by one
/// request at a time.
class HttpPool {
 public:
  HttpPool(const std::string& url, std::chrono::milliseconds timeout) : timeout_(timeout) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(Errc::kConfigError, "provider url must include a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  /// POSTs a JSON body. Throws ProviderUnavailable on transport failure,
  /// timeout, or a non-2xx status.
  nlohmann::json post(const nlohmann::json& body) {
    const auto timeout = effective_timeout();
    auto client = acquire();
    client->set_connection_timeout(timeout);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);
    auto res = client->Post(path_, body.dump(), "application/json");
    if (!res) {
      throw Error(Errc::kProviderUnavailable,
                  origin_ + path_ + " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(Errc::kProviderUnavailable,
                  origin_ + path_ + " returned HTTP " + std::to_string(res->status));
    }
    release(std::move(client));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kProviderUnavailable, "malformed provider response: " + std::string(e.what()));
    }
  }

  bool probe(std::chrono::milliseconds budget) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(budget);
    client.set_read_timeout(budget);
    client.set_write_timeout(budget);
    // any HTTP response, even 404/405, means the endpoint is up
    return static_cast<bool>(client.Get(path_));
  }


 private:
  std::chrono::milliseconds effective_timeout() const {
    auto timeout = timeout_;
    if (auto deadline = current_deadline()) {
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now());
      if (remaining.count() <= 0) {
        throw Error(Errc::kProviderUnavailable, "request deadline exceeded before provider call");
      }
      timeout = std::min(timeout, remaining);
    }
    return timeout;
  }

  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard lock(mu_);
      if (!idle_.empty()) {
        auto c = std::move(idle_.back());
        idle_.pop_back();
        return c;
      }
    }
    auto c = std::make_unique<httplib::Client>(origin_);
    c->set_keep_alive(true);
    return c;
  }

  void release(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(mu_);
    if (idle_.size() < kMaxIdle) idle_.push_back(std::move(client));
  }

  static constexpr std::size_t kMaxIdle = 8;
  std::string origin_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
};

RemoteEmbedder::RemoteEmbedder(RemoteEndpoint endpoint, std::size_t dim)
    : url_(endpoint.url), dim_(dim), pool_(std::make_unique<HttpPool>(endpoint.url, endpoint.timeout)) {
  if (dim_ == 0) throw Error(Errc::kConfigError, "remote embedder dimension must be positive");
}

RemoteEmbedder::~RemoteEmbedder() = default;

bool RemoteEmbedder::reachable(std::chrono::milliseconds budget) const { return pool_->probe(budget); }

EmbeddingVector RemoteEmbedder::do_embed(std::string_view text) const {
  const auto reply = pool_->post({{"text", std::string(text)}});
  std::vector<double> values;
  try {
    values = reply.at("vector").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProviderUnavailable, "remote encoder reply lacks a vector: " + std::string(e.what()));
  }
  if (values.size() != dim_) {
    throw Error(Errc::kProviderUnavailable,
                "remote encoder returned dimension " + std::to_string(values.size()) + ", expected " +
                    std::to_string(dim_));
  }
  try {
    return EmbeddingVector::normalized(std::move(values));
  } catch (const Error& e) {
    throw Error(Errc::kProviderUnavailable, std::string("remote encoder vector rejected: ") + e.what());
  }
}

RemoteLlm::RemoteLlm(RemoteEndpoint endpoint, std::shared_ptr<const PromptLibrary> prompts)
    : LlmProvider(std::move(prompts)),
      url_(endpoint.url),
      pool_(std::make_unique<HttpPool>(endpoint.url, endpoint.timeout)) {}

RemoteLlm::~RemoteLlm() = default;

bool RemoteLlm::reachable(std::chrono::milliseconds budget) const { return pool_->probe(budget); }

LlmReply RemoteLlm::do_complete(const PromptRequest&, const std::string& rendered) const {
  const auto reply = pool_->post({{"prompt", rendered}});
  std::string text;
  try {
    text = reply.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProviderUnavailable, "remote LLM reply lacks text: " + std::string(e.what()));
  }
  if (text.empty()) throw Error(Errc::kProviderUnavailable, "remote LLM returned an empty reply");
  return {std::move(text), id()};
}

}  // namespace kbqa
