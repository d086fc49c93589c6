#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kbqa {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

/// Unit-norm, finite, fixed-dimension vector.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  /// L2-normalizes `values`. Throws InvalidArgument on empty, non-finite or
  /// all-zero input.
  static EmbeddingVector normalized(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

// Remote calls made while a deadline is active cap their timeouts to the time
// remaining and fail fast once it has passed.
using Clock = std::chrono::steady_clock;

class DeadlineScope {
 public:
  explicit DeadlineScope(Clock::time_point deadline);
  ~DeadlineScope();
  DeadlineScope(const DeadlineScope&) = delete;
  DeadlineScope& operator=(const DeadlineScope&) = delete;

 private:
  std::optional<Clock::time_point> previous_;
};

std::optional<Clock::time_point> current_deadline();

// ---------------------------------------------------------------------------
// Embedding

class Embedder {
 public:
  virtual ~Embedder() = default;

  /// Throws InvalidArgument on empty text, ProviderUnavailable on remote failure.
  EmbeddingVector embed(std::string_view text) const;

  virtual std::size_t dim() const = 0;
  virtual std::string id() const = 0;
  virtual bool reachable(std::chrono::milliseconds /*budget*/) const { return true; }

  std::uint64_t call_count() const noexcept { return calls_.load(); }

 protected:
  virtual EmbeddingVector do_embed(std::string_view text) const = 0;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Signed feature hashing over preprocess tokens: h1 picks the component,
/// the parity of h2 picks the sign.
EmbeddingVector mock_embed(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

std::uint64_t mock_index_hash(std::string_view token);
std::uint64_t mock_sign_hash(std::string_view token);

class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dim = kDefaultEmbeddingDim);
  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "mock-embedder"; }

 protected:
  EmbeddingVector do_embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Text generation

enum class PromptTemplateId { kIntentFallback, kAnswerRender, kClarifyCause, kElicitIntent };

std::string_view template_name(PromptTemplateId id);
PromptTemplateId parse_template_id(std::string_view name);

struct PromptRequest {
  PromptTemplateId template_id = PromptTemplateId::kIntentFallback;
  std::map<std::string, std::string> variables;
};

struct LlmReply {
  std::string text;
  std::string provider_id;
};

/// Replaces every `{{slot}}` in `text`. Throws InvalidArgument when a slot
/// has no value.
std::string render_slots(std::string_view text, const std::map<std::string, std::string>& variables);
std::vector<std::string> template_slots(std::string_view text);

/// Prompt texts keyed by template id. Files are named `<template>.txt`.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  static PromptLibrary load_dir(const std::filesystem::path& dir);

  void set(PromptTemplateId id, std::string text);
  const std::string& text(PromptTemplateId id) const;
  std::string render(const PromptRequest& request) const;

 private:
  std::map<PromptTemplateId, std::string> texts_;
};

class LlmProvider {
 public:
  explicit LlmProvider(std::shared_ptr<const PromptLibrary> prompts);
  virtual ~LlmProvider() = default;

  /// Validates the request against the prompt library, then generates.
  /// Throws ProviderUnavailable when the backend cannot answer.
  LlmReply complete(const PromptRequest& request) const;

  virtual std::string id() const = 0;
  virtual bool reachable(std::chrono::milliseconds /*budget*/) const { return true; }

  std::uint64_t call_count() const noexcept { return calls_.load(); }
  std::uint64_t call_count(PromptTemplateId id) const noexcept;
  const PromptLibrary& prompts() const noexcept { return *prompts_; }

 protected:
  virtual LlmReply do_complete(const PromptRequest& request, const std::string& rendered) const = 0;

 private:
  std::shared_ptr<const PromptLibrary> prompts_;
  mutable std::atomic<std::uint64_t> calls_{0};
  mutable std::atomic<std::uint64_t> per_template_[4] = {};
};

/// Deterministic stand-in: replies come from registered entries, then per
/// template defaults (themselves `{{slot}}` templates).
class ScriptedLlm final : public LlmProvider {
 public:
  struct Entry {
    PromptTemplateId template_id;
    std::map<std::string, std::string> match;  // subset of request variables
    std::string reply;
  };

  explicit ScriptedLlm(std::shared_ptr<const PromptLibrary> prompts);

  /// JSON Lines: {"template", "match", "reply"} or {"template", "default"}.
  static std::unique_ptr<ScriptedLlm> load(const std::filesystem::path& path,
                                           std::shared_ptr<const PromptLibrary> prompts);

  void add(Entry entry);
  void set_default(PromptTemplateId id, std::string reply_template);
  std::string id() const override { return "scripted-llm"; }

 protected:
  LlmReply do_complete(const PromptRequest& request, const std::string& rendered) const override;

 private:
  std::vector<Entry> entries_;
  std::map<PromptTemplateId, std::string> defaults_;
};

class DisabledLlm final : public LlmProvider {
 public:
  using LlmProvider::LlmProvider;
  std::string id() const override { return "disabled-llm"; }
  bool reachable(std::chrono::milliseconds) const override { return false; }

 protected:
  LlmReply do_complete(const PromptRequest&, const std::string&) const override;
};

// ---------------------------------------------------------------------------
// HTTP-backed providers

class HttpPool;

struct RemoteEndpoint {
  std::string url;  // e.g. http://127.0.0.1:9000/embed
  std::chrono::milliseconds timeout{2000};
};

class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(RemoteEndpoint endpoint, std::size_t dim);
  ~RemoteEmbedder() override;

  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "remote-embedder:" + url_; }
  bool reachable(std::chrono::milliseconds budget) const override;

 protected:
  EmbeddingVector do_embed(std::string_view text) const override;

 private:
  std::string url_;
  std::size_t dim_;
  std::unique_ptr<HttpPool> pool_;
};

class RemoteLlm final : public LlmProvider {
 public:
  RemoteLlm(RemoteEndpoint endpoint, std::shared_ptr<const PromptLibrary> prompts);
  ~RemoteLlm() override;

  std::string id() const override { return "remote-llm:" + url_; }
  bool reachable(std::chrono::milliseconds budget) const override;

 protected:
  LlmReply do_complete(const PromptRequest& request, const std::string& rendered) const override;

 private:
  std::string url_;
  std::unique_ptr<HttpPool> pool_;
};

}  // namespace kbqa
