#include "kbqa/adapt.hpp"

#include <cctype>
#include <cstdio>
#include <random>

#include "kbqa/error.hpp"

namespace kbqa {

std::string_view state_name(SessionState s) {
  switch (s) {
    case SessionState::kAnswerDelivered: return "AnswerDelivered";
    case SessionState::kClarifyCause: return "ClarifyCause";
    case SessionState::kElicitIntent: return "ElicitIntent";
    case SessionState::kClosed: return "Closed";
  }
  return "Closed";
}

Cause parse_cause(std::string_view text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "intent") return Cause::kIntent;
  if (t == "other") return Cause::kOther;
  throw Error(Errc::kInvalidArgument, "cause must be 'intent' or 'other'", {{"value", std::string(text)}});
}

DialogueSession open_session(std::string id, CleanQuestion question, std::optional<EmbeddingVector> vector,
                             RecognitionResult recognition, const std::string& answer_text) {
  DialogueSession s;
  s.id = std::move(id);
  s.transcript.push_back({"user", question.original.text});
  s.transcript.push_back({"system", answer_text});
  s.last_question = std::move(question);
  s.last_vector = std::move(vector);
  s.last_recognition = std::move(recognition);
  return s;
}

namespace {

void require(const DialogueSession& s, SessionState expected, std::string_view step) {
  if (s.state == expected) return;
  throw Error(Errc::kWrongState,
              std::string(step) + " is not allowed in state " + std::string(state_name(s.state)),
              {{"state", std::string(state_name(s.state))}, {"expected", std::string(state_name(expected))}});
}

std::string phrase(const LlmProvider* llm, PromptTemplateId id, const DialogueSession& s, std::string canned) {
  if (llm != nullptr) {
    try {
      return llm->complete({id, {{"question", s.last_question.original.text}, {"intent", s.last_recognition.label}}})
          .text;
    } catch (const Error& e) {
      if (e.code() != Errc::kProviderUnavailable) throw;
    }
  }
  return canned;
}

Turn reply(DialogueSession& s, std::string prompt) {
  s.transcript.push_back({"system", prompt});
  return {std::move(prompt), s.state, std::nullopt};
}

}  // namespace

Turn feedback(DialogueSession& s, bool satisfied, const LlmProvider* llm) {
  require(s, SessionState::kAnswerDelivered, "feedback");
  if (satisfied) {
    s.transcript.push_back({"user", "satisfied"});
    s.state = SessionState::kClosed;
    return reply(s, "Thank you for the feedback. Glad the answer helped.");
  }
  std::string prompt = phrase(llm, PromptTemplateId::kClarifyCause, s,
                              "Sorry about that. I understood your question as \"" + s.last_recognition.label +
                                  "\". Was the intent misunderstood? Reply 'intent' if so, or 'other' "
                                  "for a different problem.");
  s.transcript.push_back({"user", "not satisfied"});
  s.state = SessionState::kClarifyCause;
  return reply(s, std::move(prompt));
}

Turn provide_cause(DialogueSession& s, Cause cause, const LlmProvider* llm) {
  require(s, SessionState::kClarifyCause, "cause");
  if (cause == Cause::kOther) {
    s.transcript.push_back({"user", "other"});
    s.state = SessionState::kClosed;
    return reply(s, "Thanks. Only misunderstood intents can be corrected here; your feedback has been noted.");
  }
  std::string prompt = phrase(llm, PromptTemplateId::kElicitIntent, s,
                              "What were you actually asking about? Please name the correct intent.");
  s.transcript.push_back({"user", "intent"});
  s.state = SessionState::kElicitIntent;
  return reply(s, std::move(prompt));
}

Turn provide_intent(DialogueSession& s, std::string_view label, IntentBase& base, const Embedder* embedder) {
  require(s, SessionState::kElicitIntent, "intent");
  const std::string slug = slugify_label(label);
  if (slug.empty()) {
    throw Error(Errc::kInvalidLabel, "the corrected intent label is empty", {{"value", std::string(label)}});
  }
  std::optional<EmbeddingVector> vector = s.last_vector;
  if (!vector && embedder != nullptr) vector = embedder->embed(s.last_question.text);

  std::string prompt;
  if (vector) {
    base.upsert(slug, s.last_question.text, *vector);
    s.last_vector = vector;
    prompt = "Thanks. I stored \"" + s.last_question.text + "\" under the intent \"" + slug + "\".";
  } else {
    prompt = "Thanks. The intent \"" + slug + "\" was noted, but no question vector is available to store it.";
  }
  s.transcript.push_back({"user", std::string(label)});
  s.state = SessionState::kClosed;
  Turn t = reply(s, std::move(prompt));
  if (vector) t.stored_label = slug;
  return t;
}

SessionManager::SessionManager(std::chrono::seconds idle_timeout, Now now)
    : idle_timeout_(idle_timeout), now_(now ? std::move(now) : Now([] { return Clock::now(); })) {
  std::random_device rd;
  salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string SessionManager::next_id() {
  char buf[40];
  std::snprintf(buf, sizeof buf, "s%llx-%llu", static_cast<unsigned long long>(salt_ & 0xffffffffffULL),
                static_cast<unsigned long long>(++counter_));
  return buf;
}

std::string SessionManager::open(CleanQuestion question, std::optional<EmbeddingVector> vector,
                                 RecognitionResult recognition, const std::string& answer_text, bool closed,
                                 const std::optional<std::string>& reuse_id) {
  std::lock_guard lock(mu_);
  const auto now = now_();
  sweep_locked(now);
  auto slot = std::make_shared<Slot>();
  const bool reuse = reuse_id && sessions_.contains(*reuse_id);
  std::string id = reuse ? *reuse_id : next_id();
  slot->session = open_session(id, std::move(question), std::move(vector), std::move(recognition), answer_text);
  if (closed) slot->session.state = SessionState::kClosed;
  slot->touched = now;
  // A request still holding the old slot finishes on it; later ones see the new one.
  sessions_.insert_or_assign(id, std::move(slot));
  return id;
}

void SessionManager::sweep_locked(Clock::time_point now) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    // A slot busy in another request is left for the next sweep.
    std::unique_lock slot_lock(it->second->mu, std::try_to_lock);
    if (slot_lock.owns_lock() && now - it->second->touched > idle_timeout_) {
      slot_lock.unlock();
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

std::shared_ptr<SessionManager::Slot> SessionManager::acquire(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw Error(Errc::kUnknownSession, "unknown or expired session '" + id + "'", {{"session_id", id}});
  }
  std::shared_ptr<Slot> slot = it->second;
  std::lock_guard slot_lock(slot->mu);
  if (now_() - slot->touched > idle_timeout_) {
    slot->session.state = SessionState::kClosed;
    sessions_.erase(it);
    throw Error(Errc::kUnknownSession, "session '" + id + "' expired", {{"session_id", id}, {"expired", "true"}});
  }
  return slot;
}

std::optional<DialogueSession> SessionManager::get(const std::string& id) {
  try {
    return with(id, [](DialogueSession& s) { return s; });
  } catch (const Error& e) {
    if (e.code() == Errc::kUnknownSession) return std::nullopt;
    throw;
  }
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionManager::clear() {
  std::lock_guard lock(mu_);
  sessions_.clear();
}

}  // namespace kbqa
