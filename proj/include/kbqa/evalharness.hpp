#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbqa/engine.hpp"

namespace kbqa {

struct EvalCase {
  std::string id;
  std::string question;
  Lang lang = Lang::kEn;
  std::string gold_intent;
  std::vector<std::string> gold_entities;
  std::vector<std::string> gold_answer_values;  // display forms of row values
  std::string kind;                             // simple | complex
  std::string subset;                           // optional grouping tag
};

/// JSON Lines. Throws DatasetInvalid on schema errors or an empty file.
std::vector<EvalCase> parse_dataset(std::istream& in);
std::vector<EvalCase> load_dataset(const std::filesystem::path& path);

/// Throws DatasetInvalid when the set is empty, ids repeat, or a gold entity
/// is not a node of the graph.
void validate_dataset(const std::vector<EvalCase>& cases, const graph::GraphSnapshot& graph);

struct CaseOutcome {
  std::string id;
  bool correct = false;
  std::string method;  // rule, embedding, llm, or "none" when unresolved
  std::string label;
  std::string error;   // API error code of the first attempt, if any
  bool corrected_by_adapt = false;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t corrected_by_adapt = 0;
  std::vector<CaseOutcome> per_case;
  std::map<std::string, std::uint64_t> tier_counts;  // first-attempt resolutions and provider calls
  std::string initial_fingerprint;                   // intent base at the start of the run
};

/// Gold values all appear among the displayed row values.
bool answer_contains(const AnswerPayload& payload, const std::vector<std::string>& gold_values);

/// Runs every case through the engine under `ablation`. A wrong delivered
/// answer, with adapt enabled, goes through the feedback flow with the gold
/// intent and is asked once more. The intent base is restored afterwards.
EvalResult run_eval(Engine& engine, const std::vector<EvalCase>& cases, const Ablation& ablation);

/// Ablation settings in row order: all, w/o rule, w/o embedding, w/o llm, w/o adapt.
std::vector<std::pair<std::string, Ablation>> table_settings();
/// Comma-separated tier names (rule, embedding, llm, adapt) or "none".
Ablation parse_ablation(std::string_view flags);
std::string setting_name(const Ablation& a);

struct GridRow {
  std::string setting;
  Ablation ablation;
  EvalResult result;
};

/// One run per setting, each from the same initial state.
std::vector<GridRow> ablation_grid(Engine& engine, const std::vector<EvalCase>& cases,
                                   const std::vector<std::pair<std::string, Ablation>>& settings = table_settings());

std::string format_grid(const std::vector<GridRow>& rows);
nlohmann::json grid_json(const std::vector<GridRow>& rows, bool with_cases = false);

}  // namespace kbqa
