#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kbqa/intent.hpp"
#include "kbqa/preprocess.hpp"
#include "kbqa/providers.hpp"

namespace kbqa {

enum class SessionState { kAnswerDelivered, kClarifyCause, kElicitIntent, kClosed };
std::string_view state_name(SessionState s);

enum class Cause { kIntent, kOther };
/// "intent" or "other"; throws InvalidArgument otherwise.
Cause parse_cause(std::string_view text);

struct TranscriptEntry {
  std::string speaker;  // "user" or "system"
  std::string text;
};

struct DialogueSession {
  std::string id;
  SessionState state = SessionState::kAnswerDelivered;
  CleanQuestion last_question;
  std::optional<EmbeddingVector> last_vector;  // filled lazily when the cascade never embedded
  RecognitionResult last_recognition;
  std::vector<TranscriptEntry> transcript;
};

struct Turn {
  std::string prompt;
  SessionState state;
  std::optional<std::string> stored_label;  // provide_intent only
};

/// Starts in AnswerDelivered with the question and answer in the transcript.
DialogueSession open_session(std::string id, CleanQuestion question, std::optional<EmbeddingVector> vector,
                             RecognitionResult recognition, const std::string& answer_text);

// Each step throws WrongState and leaves the session untouched when called
// out of order. A null or failing LLM falls back to canned wording.
Turn feedback(DialogueSession& s, bool satisfied, const LlmProvider* llm);
Turn provide_cause(DialogueSession& s, Cause cause, const LlmProvider* llm);

/// Stores (label, question text, question vector) in the base. Without a
/// vector and without an embedder the session closes with nothing stored.
/// Throws InvalidLabel when the label slugifies to nothing.
Turn provide_intent(DialogueSession& s, std::string_view label, IntentBase& base, const Embedder* embedder);

/// Thread-safe session registry with idle expiry. Each session is
/// serialized by its own lock; distinct sessions run concurrently.
class SessionManager {
 public:
  using Now = std::function<Clock::time_point()>;

  explicit SessionManager(std::chrono::seconds idle_timeout = std::chrono::minutes(15), Now now = {});

  /// Registers a session (optionally already closed) and returns its id.
  /// A live `reuse_id` is restarted in place; otherwise a fresh id is made.
  std::string open(CleanQuestion question, std::optional<EmbeddingVector> vector, RecognitionResult recognition,
                   const std::string& answer_text, bool closed = false,
                   const std::optional<std::string>& reuse_id = std::nullopt);

  /// Runs `fn` on the live session. Throws UnknownSession for an unknown or
  /// expired id (expired sessions are dropped).
  template <typename Fn>
  auto with(const std::string& id, Fn&& fn) {
    auto slot = acquire(id);
    std::lock_guard lock(slot->mu);
    auto result = fn(slot->session);
    slot->touched = now_();
    return result;
  }

  std::optional<DialogueSession> get(const std::string& id);
  std::size_t size() const;
  void clear();

 private:
  struct Slot {
    std::mutex mu;
    DialogueSession session;
    Clock::time_point touched;
  };

  std::shared_ptr<Slot> acquire(const std::string& id);
  void sweep_locked(Clock::time_point now);
  std::string next_id();

  std::chrono::seconds idle_timeout_;
  Now now_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_;
};

}  // namespace kbqa
