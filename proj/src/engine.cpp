#include "kbqa/engine.hpp"

#include <fstream>
#include <future>

#include "kbqa/error.hpp"

namespace kbqa {

Engine::Engine(Providers providers, StopwordList stop_en, StopwordList stop_zh, CascadeConfig cascade,
               std::chrono::seconds session_idle_timeout, std::chrono::milliseconds request_budget,
               SessionManager::Now now)
    : providers_(std::move(providers)),
      stop_en_(std::move(stop_en)),
      stop_zh_(std::move(stop_zh)),
      request_budget_(request_budget),
      sessions_(session_idle_timeout, std::move(now)),
      cascade_(std::move(cascade)),
      rules_(std::make_shared<const std::vector<IntentRule>>()) {
  if (!providers_.embedder || !providers_.llm) throw Error(Errc::kInvalidArgument, "engine needs both providers");
  cascade_.validate();
  base_ = std::make_unique<IntentBase>(providers_.embedder->dim());
}

std::unique_ptr<Engine> Engine::from_config(const ServiceConfig& config) {
  config.validate();
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(config.provider_timeout_seconds * 1000.0));

  auto prompts = std::make_shared<const PromptLibrary>(
      config.prompts_dir.empty() ? PromptLibrary::builtin() : PromptLibrary::load_dir(config.prompts_dir));

  Providers providers;
  if (config.embedding_provider == "remote") {
    providers.embedder = std::make_shared<RemoteEmbedder>(RemoteEndpoint{config.embedding_url, timeout},
                                                          config.embedding_dim);
  } else {
    providers.embedder = std::make_shared<MockEmbedder>(config.embedding_dim);
  }
  if (config.llm_provider == "remote") {
    providers.llm = std::make_shared<RemoteLlm>(RemoteEndpoint{config.llm_url, timeout}, prompts);
  } else if (config.llm_provider == "disabled") {
    providers.llm = std::make_shared<DisabledLlm>(prompts);
  } else if (config.llm_script.empty()) {
    providers.llm = std::make_shared<ScriptedLlm>(prompts);
  } else {
    providers.llm = ScriptedLlm::load(config.llm_script, prompts);
  }

  CascadeConfig cascade;
  cascade.tau = config.tau;
  cascade.allow_new_labels = config.allow_new_labels;

  auto engine = std::make_unique<Engine>(
      std::move(providers), config.stoplist_en.empty() ? StopwordList() : load_stoplist(config.stoplist_en),
      config.stoplist_zh.empty() ? StopwordList() : load_stoplist(config.stoplist_zh), cascade,
      std::chrono::seconds(static_cast<long long>(config.session_idle_timeout_seconds)),
      // Remote calls within one request share this budget.
      timeout);

  const std::pair<IngestKind, const std::filesystem::path*> files[] = {{IngestKind::kTriples, &config.triples},
                                                                       {IngestKind::kTemplates, &config.templates},
                                                                       {IngestKind::kRules, &config.rules},
                                                                       {IngestKind::kSeeds, &config.seeds}};
  for (const auto& [kind, path] : files) {
    if (path->empty()) continue;
    engine->startup_reports_.emplace_back(std::string(ingest_kind_name(kind)), engine->ingest_file(kind, *path));
  }
  engine->set_ablation({config.disable_rule, config.disable_embedding, config.disable_llm, config.disable_adapt});
  return engine;
}

Ablation Engine::ablation() const {
  std::lock_guard lock(mu_);
  return ablation_;
}

void Engine::set_ablation(const Ablation& a) {
  std::lock_guard lock(mu_);
  ablation_ = a;
}

CascadeConfig Engine::cascade() const {
  std::lock_guard lock(mu_);
  return cascade_;
}

void Engine::set_tau(double tau) {
  CascadeConfig next = cascade();
  next.tau = tau;
  next.validate();
  std::lock_guard lock(mu_);
  cascade_ = std::move(next);
}

std::shared_ptr<const std::vector<IntentRule>> Engine::rules() const {
  std::lock_guard lock(mu_);
  return rules_;
}

std::shared_ptr<const EntityLexicon> Engine::lexicon(const graph::SnapshotPtr& graph) {
  {
    std::lock_guard lock(mu_);
    if (lexicon_ && lexicon_graph_ == graph) return lexicon_;
  }
  auto built = std::make_shared<const EntityLexicon>(build_lexicon(*graph, {&stop_en_, &stop_zh_}));
  std::lock_guard lock(mu_);
  lexicon_graph_ = graph;
  lexicon_ = built;
  return built;
}

AskResult Engine::ask(const RawQuestion& question, const std::optional<std::string>& session_id) {
  const DeadlineScope deadline(Clock::now() + request_budget_);
  const Ablation ab = ablation();
  const CascadeConfig cascade_config = cascade();
  const auto rule_set = rules();
  const auto graph = store_.snapshot();
  const auto lex = lexicon(graph);

  CascadeTiers tiers;
  tiers.rules = ab.rule ? nullptr : rule_set.get();
  tiers.embedder = ab.embedding ? nullptr : providers_.embedder.get();
  tiers.llm = ab.llm ? nullptr : providers_.llm.get();
  tiers.extra_labels = templates_.labels();

  const AnswerDeps deps{stoplist(question.lang), *base_,  cascade_config, tiers, templates_, *lex,
                        *graph,                  tiers.llm};
  AskResult out;
  out.payload = answer(question, deps);
  out.session_id = sessions_.open(out.payload.question, out.payload.recognition.question_vector,
                                  out.payload.recognition, out.payload.answer_text, ab.adapt, session_id);
  return out;
}

FeedbackResult Engine::feedback(const std::string& session_id, std::string_view step, const std::string& value) {
  const DeadlineScope deadline(Clock::now() + request_budget_);
  const Ablation ab = ablation();
  const LlmProvider* llm = ab.llm ? nullptr : providers_.llm.get();
  const Embedder* embedder = ab.embedding ? nullptr : providers_.embedder.get();

  // Parse the value before touching the session so a bad value changes nothing.
  std::optional<bool> satisfied;
  std::optional<Cause> cause;
  if (step == "satisfied") {
    if (value == "true") {
      satisfied = true;
    } else if (value == "false") {
      satisfied = false;
    } else {
      throw Error(Errc::kInvalidArgument, "satisfied must be true or false", {{"value", value}});
    }
  } else if (step == "cause") {
    cause = parse_cause(value);
  } else if (step != "intent") {
    throw Error(Errc::kInvalidArgument, "step must be satisfied, cause or intent", {{"step", std::string(step)}});
  }

  FeedbackResult out;
  out.session_id = session_id;
  out.turn = sessions_.with(session_id, [&](DialogueSession& s) {
    if (satisfied) return kbqa::feedback(s, *satisfied, llm);
    if (cause) return provide_cause(s, *cause, llm);
    return provide_intent(s, value, *base_, embedder);
  });
  return out;
}

IngestReport Engine::ingest(IngestKind kind, std::istream& in, const std::string& filename) {
  switch (kind) {
    case IngestKind::kTriples:
      return load_triples(in, triple_format_for(filename), store_);
    case IngestKind::kTemplates:
      require_jsonl(filename);
      return load_templates(in, templates_);
    case IngestKind::kRules: {
      require_jsonl(filename);
      std::lock_guard writer(rules_writer_);
      auto next = *rules();
      auto report = load_rules(in, next);
      std::lock_guard lock(mu_);
      rules_ = std::make_shared<const std::vector<IntentRule>>(std::move(next));
      return report;
    }
    case IngestKind::kSeeds: {
      require_jsonl(filename);
      const auto lex = lexicon(store_.snapshot());
      const Cleaner cleaner = [&](const RawQuestion& raw) { return clean(raw, stoplist(raw.lang), &lex->merge()); };
      return load_intent_seeds(in, *base_, *providers_.embedder, cleaner);
    }
  }
  throw Error(Errc::kInternal, "unhandled ingest kind");
}

IngestReport Engine::ingest_file(IngestKind kind, const std::filesystem::path& path) {
  // Format first so an unsupported file is reported as such even if missing.
  if (kind == IngestKind::kTriples) {
    triple_format_for(path);
  } else {
    require_jsonl(path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileUnreadable, "cannot read " + path.string(), {{"path", path.string()}});
  return ingest(kind, in, path.filename().string());
}

Health Engine::health() const {
  using namespace std::chrono_literals;
  const Ablation ab = ablation();
  const auto budget = 450ms;
  auto probe = [budget](auto* provider) { return provider->reachable(budget); };

  std::future<bool> emb_ok, llm_ok;
  if (!ab.embedding) emb_ok = std::async(std::launch::async, probe, providers_.embedder.get());
  const bool llm_off = ab.llm || dynamic_cast<const DisabledLlm*>(providers_.llm.get()) != nullptr;
  if (!llm_off) llm_ok = std::async(std::launch::async, probe, providers_.llm.get());

  Health h;
  h.embedder = {providers_.embedder->id(), ab.embedding ? "disabled" : (emb_ok.get() ? "ok" : "unreachable")};
  h.llm = {providers_.llm->id(), llm_off ? "disabled" : (llm_ok.get() ? "ok" : "unreachable")};
  h.status = (h.embedder.status == "unreachable" || h.llm.status == "unreachable") ? "degraded" : "ok";
  return h;
}

}  // namespace kbqa
