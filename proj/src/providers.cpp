#include "kbqa/providers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kbqa/error.hpp"
#include "kbqa/preprocess.hpp"

namespace kbqa {

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
  if (values.empty()) {
    throw Error(Errc::kInvalidArgument, "embedding vector must have positive dimension");
  }
  double sum_sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(Errc::kInvalidArgument, "embedding vector has a non-finite component");
    }
    sum_sq += v * v;
  }
  const double norm = std::sqrt(sum_sq);
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw Error(Errc::kInvalidArgument, "embedding vector has zero norm");
  }
  // Already unit length: dividing again would only perturb the low bits, so
  // stored vectors survive a save/load round trip unchanged.
  if (std::abs(norm - 1.0) > 1e-15) {
    for (double& v : values) v /= norm;
  }
  return EmbeddingVector(std::move(values));
}

namespace {

thread_local std::optional<Clock::time_point> t_deadline;

}  // namespace

DeadlineScope::DeadlineScope(Clock::time_point deadline) : previous_(t_deadline) {
  t_deadline = previous_ ? std::min(*previous_, deadline) : deadline;
}

DeadlineScope::~DeadlineScope() { t_deadline = previous_; }

std::optional<Clock::time_point> current_deadline() { return t_deadline; }

// ---------------------------------------------------------------------------

EmbeddingVector Embedder::embed(std::string_view text) const {
  if (text.empty()) {
    throw Error(Errc::kInvalidArgument, "cannot embed empty text");
  }
  calls_.fetch_add(1);
  return do_embed(text);
}

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint64_t kIndexBasis = 0xcbf29ce484222325ULL;  // standard FNV-1a offset
constexpr std::uint64_t kSignBasis = 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

std::uint64_t mock_index_hash(std::string_view token) { return fnv1a(token, kIndexBasis); }
std::uint64_t mock_sign_hash(std::string_view token) { return fnv1a(token, kSignBasis); }

EmbeddingVector mock_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) throw Error(Errc::kInvalidArgument, "embedding dimension must be positive");
  const auto tokens = tokenize(text, Lang::kEn);
  if (tokens.empty()) {
    throw Error(Errc::kInvalidArgument, "text has no tokens to embed");
  }
  std::vector<double> acc(dim, 0.0);
  for (const auto& token : tokens) {
    const std::size_t index = mock_index_hash(token) % dim;
    acc[index] += (mock_sign_hash(token) % 2 == 0) ? 1.0 : -1.0;
  }
  bool any = false;
  for (double v : acc) any = any || v != 0.0;
  if (!any) {
    // Opposite-signed tokens colliding in every bucket; only possible with
    // several tokens. Fall back to the unsigned histogram.
    for (const auto& token : tokens) acc[mock_index_hash(token) % dim] += 1.0;
  }
  return EmbeddingVector::normalized(std::move(acc));
}

MockEmbedder::MockEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error(Errc::kInvalidArgument, "embedding dimension must be positive");
}

EmbeddingVector MockEmbedder::do_embed(std::string_view text) const { return mock_embed(text, dim_); }

// ---------------------------------------------------------------------------

std::string_view template_name(PromptTemplateId id) {
  switch (id) {
    case PromptTemplateId::kIntentFallback: return "intent_fallback";
    case PromptTemplateId::kAnswerRender: return "answer_render";
    case PromptTemplateId::kClarifyCause: return "clarify_cause";
    case PromptTemplateId::kElicitIntent: return "elicit_intent";
  }
  return "intent_fallback";
}

PromptTemplateId parse_template_id(std::string_view name) {
  for (auto id : {PromptTemplateId::kIntentFallback, PromptTemplateId::kAnswerRender,
                  PromptTemplateId::kClarifyCause, PromptTemplateId::kElicitIntent}) {
    if (template_name(id) == name) return id;
  }
  throw Error(Errc::kInvalidArgument, "unknown prompt template '" + std::string(name) + "'");
}

namespace {

// Calls `on_slot(begin, end, name)` for each `{{name}}` occurrence.
template <typename F>
void scan_slots(std::string_view text, F&& on_slot) {
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const auto close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) break;
    std::string_view name = text.substr(pos + 2, close - pos - 2);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    on_slot(pos, close + 2, name);
    pos = close + 2;
  }
}

}  // namespace

std::vector<std::string> template_slots(std::string_view text) {
  std::vector<std::string> slots;
  scan_slots(text, [&](std::size_t, std::size_t, std::string_view name) {
    std::string s(name);
    if (std::find(slots.begin(), slots.end(), s) == slots.end()) slots.push_back(std::move(s));
  });
  return slots;
}

std::string render_slots(std::string_view text, const std::map<std::string, std::string>& variables) {
  std::string out;
  std::size_t copied = 0;
  scan_slots(text, [&](std::size_t begin, std::size_t end, std::string_view name) {
    auto it = variables.find(std::string(name));
    if (it == variables.end()) {
      throw Error(Errc::kInvalidArgument, "prompt slot '" + std::string(name) + "' has no value",
                  {{"slot", std::string(name)}});
    }
    out.append(text.substr(copied, begin - copied));
    out += it->second;
    copied = end;
  });
  out.append(text.substr(copied));
  return out;
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.set(PromptTemplateId::kIntentFallback,
          "You classify questions for a financial knowledge-graph assistant.\n"
          "Known intents: {{intents}}\n\n"
          "Follow the reasoning shown in this example:\n{{demonstration}}\n\n"
          "Question: {{question}}\n"
          "Decide which known intent fits. If none fits, propose a short new intent name.\n"
          "Finish with exactly one line of the form \"intent: <label>\".\n");
  lib.set(PromptTemplateId::kAnswerRender,
          "Answer the question using only the knowledge below, in one or two sentences.\n"
          "Question: {{question}}\nKnowledge:\n{{knowledge}}\n");
  lib.set(PromptTemplateId::kClarifyCause,
          "A user was not satisfied with an answer. In one polite sentence, ask whether the "
          "problem is that the question \"{{question}}\" was understood as the intent "
          "\"{{intent}}\" when they meant something else.\n");
  lib.set(PromptTemplateId::kElicitIntent,
          "The user says the question \"{{question}}\" was misunderstood (it was read as "
          "\"{{intent}}\"). In one sentence, ask what they were actually asking about.\n");
  return lib;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  PromptLibrary lib = builtin();
  for (auto id : {PromptTemplateId::kIntentFallback, PromptTemplateId::kAnswerRender,
                  PromptTemplateId::kClarifyCause, PromptTemplateId::kElicitIntent}) {
    const auto path = dir / (std::string(template_name(id)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.set(id, buf.str());
  }
  return lib;
}

void PromptLibrary::set(PromptTemplateId id, std::string text) { texts_[id] = std::move(text); }

const std::string& PromptLibrary::text(PromptTemplateId id) const {
  auto it = texts_.find(id);
  if (it == texts_.end()) {
    throw Error(Errc::kInvalidArgument, "no prompt text for " + std::string(template_name(id)));
  }
  return it->second;
}

std::string PromptLibrary::render(const PromptRequest& request) const {
  return render_slots(text(request.template_id), request.variables);
}

// ---------------------------------------------------------------------------

LlmProvider::LlmProvider(std::shared_ptr<const PromptLibrary> prompts) : prompts_(std::move(prompts)) {
  if (!prompts_) prompts_ = std::make_shared<const PromptLibrary>(PromptLibrary::builtin());
}

LlmReply LlmProvider::complete(const PromptRequest& request) const {
  const std::string rendered = prompts_->render(request);
  calls_.fetch_add(1);
  per_template_[static_cast<int>(request.template_id)].fetch_add(1);
  return do_complete(request, rendered);
}

std::uint64_t LlmProvider::call_count(PromptTemplateId id) const noexcept {
  return per_template_[static_cast<int>(id)].load();
}

ScriptedLlm::ScriptedLlm(std::shared_ptr<const PromptLibrary> prompts) : LlmProvider(std::move(prompts)) {
  defaults_[PromptTemplateId::kIntentFallback] = "I could not determine the intent of this question.";
  defaults_[PromptTemplateId::kAnswerRender] = "{{knowledge}}";
  defaults_[PromptTemplateId::kClarifyCause] =
      "Was the problem that I understood your question as \"{{intent}}\"? "
      "Answer 'intent' if I misunderstood what you asked, or 'other' for anything else.";
  defaults_[PromptTemplateId::kElicitIntent] =
      "Understood. What were you actually asking about? Please name the correct intent.";
}

std::unique_ptr<ScriptedLlm> ScriptedLlm::load(const std::filesystem::path& path,
                                               std::shared_ptr<const PromptLibrary> prompts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileUnreadable, "cannot read LLM script " + path.string());
  auto llm = std::make_unique<ScriptedLlm>(std::move(prompts));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto id = parse_template_id(j.at("template").get<std::string>());
      if (j.contains("default")) {
        llm->set_default(id, j.at("default").get<std::string>());
        continue;
      }
      Entry entry{id, {}, j.at("reply").get<std::string>()};
      if (j.contains("match")) {
        for (const auto& [k, v] : j.at("match").items()) entry.match[k] = v.get<std::string>();
      }
      llm->add(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kMalformedLine,
                  "LLM script line " + std::to_string(line_no) + ": " + e.what(),
                  {{"line", std::to_string(line_no)}});
    }
  }
  return llm;
}

void ScriptedLlm::add(Entry entry) { entries_.push_back(std::move(entry)); }

void ScriptedLlm::set_default(PromptTemplateId id, std::string reply_template) {
  defaults_[id] = std::move(reply_template);
}

LlmReply ScriptedLlm::do_complete(const PromptRequest& request, const std::string&) const {
  for (const auto& entry : entries_) {
    if (entry.template_id != request.template_id) continue;
    bool ok = true;
    for (const auto& [k, v] : entry.match) {
      auto it = request.variables.find(k);
      if (it == request.variables.end() || it->second != v) {
        ok = false;
        break;
      }
    }
    if (ok) return {entry.reply, id()};
  }
  auto it = defaults_.find(request.template_id);
  std::string text = it == defaults_.end() ? std::string() : render_slots(it->second, request.variables);
  if (text.empty()) {
    throw Error(Errc::kProviderUnavailable, "scripted LLM has no reply for " +
                                                std::string(template_name(request.template_id)));
  }
  return {std::move(text), id()};
}

LlmReply DisabledLlm::do_complete(const PromptRequest&, const std::string&) const {
  throw Error(Errc::kProviderUnavailable, "LLM provider is disabled");
}

}  // namespace kbqa
