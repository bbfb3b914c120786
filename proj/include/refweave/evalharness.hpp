#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "refweave/llm.hpp"
#include "refweave/manuscript.hpp"
#include "refweave/query.hpp"

namespace refweave::eval {

enum class Method { System, BaselineA, BaselineB };
enum class Judge { HumanFile, Llm };

std::string_view to_string(Method method);
std::string_view to_string(Judge judge);

struct RefJudgment {
  std::string ref_id;
  bool valid = false;
  std::optional<bool> relevant;  // unset when unjudged; only set for valid refs
};

struct LabeledRun {
  std::string sentence_id;
  Method method = Method::System;
  std::vector<RefJudgment> references;
  Judge judge = Judge::HumanFile;
};

/// Rows `sentence_id,ref_id,valid,relevant,judge` (header required; an
/// optional `method` column is honoured). Refs of one sentence are grouped
/// in first-seen order. Throws InvalidArgument.
std::vector<LabeledRun> parse_runs_csv(std::string_view csv);
std::vector<LabeledRun> load_runs_csv(const std::filesystem::path& file);
std::string runs_to_csv(const std::vector<LabeledRun>& runs);

struct Metrics {
  std::size_t sentences = 0;
  std::size_t references = 0;
  std::size_t valid = 0;
  std::size_t judged = 0;
  std::size_t relevant = 0;
  std::size_t usable_sentences = 0;
  double validity_pct = 0.0;
  std::optional<double> precision_pct;  // unset with zero judged refs
  double usability_pct = 0.0;
};

/// Percentages are rounded to one decimal.
Metrics compute_metrics(const std::vector<LabeledRun>& runs);
/// As compute_metrics, but throws NoJudgments when nothing was judged.
Metrics compute_metrics_with_precision(const std::vector<LabeledRun>& runs);

double round1(double value);
nlohmann::json to_json(const Metrics& metrics);
std::string format_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows);

struct QueryRow {
  QueryVariant variant = QueryVariant::RawSentence;
  std::size_t claim_index = 0;
  std::string query_string;
};

/// Query strings of every variant, grouped by variant.
std::vector<QueryRow> compare_queries(const std::vector<Claim>& claims, const DocumentSchema& schema,
                                      std::string_view surrounding, llm::Gateway& gateway);
std::string format_query_table(const std::vector<QueryRow>& rows);

inline constexpr double kJudgeThreshold = 0.5;

/// Re-judges every valid reference with one MATCH_SCORE call per sentence;
/// a reference is relevant when its score reaches `threshold`. Claims and
/// reference texts are looked up by sentence_id and ref_id.
std::vector<LabeledRun> judge_with_llm(const std::vector<LabeledRun>& runs,
                                       const std::map<std::string, std::string>& claims,
                                       const std::map<std::string, std::string>& references,
                                       llm::Gateway& gateway, double threshold = kJudgeThreshold);

}  // namespace refweave::eval
