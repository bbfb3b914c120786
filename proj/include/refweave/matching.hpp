#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refweave/llm.hpp"
#include "refweave/manuscript.hpp"
#include "refweave/query.hpp"
#include "refweave/repositories.hpp"
#include "refweave/routing.hpp"
#include "refweave/verification.hpp"

namespace refweave {

struct ParagraphMatch {
  std::size_t paragraph_index = 0;  // global_index into the ParsedDocument
  double score = 0.0;
  std::string rationale;
  std::string text;  // verbatim parsed paragraph, for display
};

struct CandidateReference {
  PaperRecord record;
  BibTexEntry bibtex;
  double overall_relevance = 0.0;
  std::vector<ParagraphMatch> matches;  // at most 3, score descending
  bool verifiable = false;
  std::string explanation;
  std::string status_note;  // why a candidate is unverifiable
};

/// Discovery metadata: how the candidates were obtained.
struct PipelineTrace {
  std::vector<Claim> claims;
  RoutingDecision routing;
  std::vector<SearchQuery> queries;
  bool used_secondary = false;
  std::vector<std::string> notes;
};

struct DiscoveryResult {
  Claim claim;
  std::vector<CandidateReference> candidates;
  std::optional<std::size_t> top;  // 0 when candidates is non-empty
  std::string created_at;
  PipelineTrace trace;
};

enum class Aggregation { Max, MeanTop3 };

struct MatchOptions {
  std::size_t shortlist_k = 12;
  std::size_t max_matches = 3;
  Aggregation aggregation = Aggregation::Max;
};

/// Distinct claim content tokens present in `paragraph`.
std::size_t overlap_count(const std::vector<std::string>& claim_tokens, std::string_view paragraph);

/// Global indices of the `k` paragraphs with the largest overlap (ties by
/// index); deterministic, no model involved.
std::vector<std::size_t> lexical_shortlist(std::string_view claim, const ParsedDocument& doc,
                                           std::size_t k);

struct CandidateScore {
  double overall = 0.0;
  std::vector<ParagraphMatch> matches;
};

/// Shortlists paragraphs, scores them in one MATCH_SCORE call, keeps the top
/// matches and aggregates to an overall relevance in [0,1].
CandidateScore score_candidate(const Claim& claim, std::string_view surrounding,
                               const ParsedDocument& doc, llm::Gateway& gateway,
                               const MatchOptions& options = {});

/// Verifiable first, then relevance descending, published descending, title
/// ascending.
DiscoveryResult rank(const Claim& claim, std::vector<CandidateReference> scored);

inline constexpr std::size_t kExplanationMaxWords = 120;

/// One CHAT call; falls back to an extractive explanation when the gateway
/// fails or the reply does not cite an existing paragraph as #<index>.
std::string explain_top(const Claim& claim, const CandidateReference& top,
                        std::size_t paragraph_count, llm::Gateway& gateway,
                        std::string_view summary = {});

std::string extractive_explanation(const CandidateReference& top);

/// True when the text cites at least one paragraph and all cited indices
/// are below `paragraph_count`.
bool explanation_cites_valid_paragraph(std::string_view explanation, std::size_t paragraph_count);

/// Title, abstract and matched paragraphs, as placed in CHAT prompts.
std::string reference_context(const CandidateReference& candidate);

}  // namespace refweave
