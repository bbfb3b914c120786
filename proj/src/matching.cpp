#include "refweave/matching.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave {

std::size_t overlap_count(const std::vector<std::string>& claim_tokens, std::string_view paragraph) {
  const auto tokens = text::content_tokens(paragraph);
  const std::set<std::string> present(tokens.begin(), tokens.end());
  const std::set<std::string> wanted(claim_tokens.begin(), claim_tokens.end());
  std::size_t n = 0;
  for (const auto& t : wanted) n += present.contains(t) ? 1 : 0;
  return n;
}

std::vector<std::size_t> lexical_shortlist(std::string_view claim, const ParsedDocument& doc,
                                           std::size_t k) {
  const auto claim_tokens = text::content_tokens(claim);
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (overlap, index)
  for (const auto& p : doc.paragraph_index) {
    scored.emplace_back(overlap_count(claim_tokens, p.text), p.global_index);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
  return out;
}

CandidateScore score_candidate(const Claim& claim, std::string_view surrounding,
                               const ParsedDocument& doc, llm::Gateway& gateway,
                               const MatchOptions& options) {
  if (doc.paragraph_index.empty()) throw Error(Errc::NoParagraphs, doc.record_ref);
  const auto shortlist = lexical_shortlist(claim.sentence, doc, options.shortlist_k);
  std::vector<std::pair<std::size_t, std::string>> items;
  for (auto idx : shortlist) items.emplace_back(idx, doc.paragraph_index[idx].text);

  auto request = llm::LlmRequest::make(llm::TemplateId::MatchScore,
                                       {{"claim", claim.sentence},
                                        {"surrounding", text::collapse_whitespace(surrounding)},
                                        {"paragraphs", llm::numbered_lines(items)}},
                                       2048);
  const std::set<std::size_t> allowed(shortlist.begin(), shortlist.end());
  llm::Validator in_shortlist = [&allowed](const nlohmann::json& doc_json) -> std::optional<llm::Violation> {
    std::set<std::size_t> seen;
    for (const auto& item : doc_json["scores"]) {
      const auto idx = item["index"].get<std::size_t>();
      if (!allowed.contains(idx)) {
        return llm::Violation{Errc::SchemaViolation,
                              "index " + std::to_string(idx) + " is not a listed paragraph"};
      }
      if (!seen.insert(idx).second) {
        return llm::Violation{Errc::SchemaViolation, "index " + std::to_string(idx) + " repeated"};
      }
    }
    return std::nullopt;
  };
  const auto response = gateway.complete_structured(request, "match_score", in_shortlist);

  std::vector<ParagraphMatch> all;
  for (const auto& item : (*response.parsed)["scores"]) {
    ParagraphMatch m;
    m.paragraph_index = item["index"].get<std::size_t>();
    m.score = std::clamp(item["score"].get<double>(), 0.0, 1.0);
    m.rationale = text::trim(item["rationale"].get<std::string>());
    m.text = doc.paragraph_index[m.paragraph_index].text;
    all.push_back(std::move(m));
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.paragraph_index < b.paragraph_index;
  });
  CandidateScore out;
  if (all.size() > options.max_matches) all.resize(options.max_matches);
  out.matches = std::move(all);
  if (!out.matches.empty()) {
    if (options.aggregation == Aggregation::Max) {
      out.overall = out.matches.front().score;
    } else {
      double sum = 0;
      for (const auto& m : out.matches) sum += m.score;
      out.overall = sum / static_cast<double>(out.matches.size());
    }
  }
  out.overall = std::clamp(out.overall, 0.0, 1.0);
  return out;
}

DiscoveryResult rank(const Claim& claim, std::vector<CandidateReference> scored) {
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.verifiable != b.verifiable) return a.verifiable;
    if (a.overall_relevance != b.overall_relevance) return a.overall_relevance > b.overall_relevance;
    if (a.record.published != b.record.published) return a.record.published > b.record.published;
    return a.record.title < b.record.title;
  });
  DiscoveryResult result;
  result.claim = claim;
  result.candidates = std::move(scored);
  if (!result.candidates.empty()) result.top = 0;
  return result;
}

bool explanation_cites_valid_paragraph(std::string_view explanation, std::size_t paragraph_count) {
  static const std::regex kRef(R"(#(\d+))");
  const std::string s(explanation);
  bool any = false;
  for (std::sregex_iterator it(s.begin(), s.end(), kRef), end; it != end; ++it) {
    const auto idx = std::stoull((*it)[1].str());
    if (idx >= paragraph_count) return false;
    any = true;
  }
  return any;
}

namespace {

std::string first_words(std::string_view s, std::size_t max_words) {
  std::vector<std::string> words;
  for (const auto& w : text::split(text::collapse_whitespace(s), ' ')) {
    if (words.size() == max_words) break;
    if (!w.empty()) words.push_back(w);
  }
  return text::join(words, " ");
}

}  // namespace

std::string extractive_explanation(const CandidateReference& top) {
  if (top.matches.empty()) return "No matched paragraphs are available for this reference.";
  const auto& best = top.matches.front();
  char score[16];
  std::snprintf(score, sizeof score, "%.2f", best.score);
  const std::string prefix = "Best-matching paragraph #" + std::to_string(best.paragraph_index) +
                             " (score " + score + "): \"";
  const auto budget = kExplanationMaxWords - text::word_count(prefix);
  return prefix + first_words(best.text, budget) + "\"";
}

std::string reference_context(const CandidateReference& candidate) {
  std::string out = "Title: " + candidate.record.title + "\nAbstract: " + candidate.record.abstract;
  if (!candidate.matches.empty()) {
    out += "\nMatched paragraphs:";
    for (const auto& m : candidate.matches) {
      out += "\n[" + std::to_string(m.paragraph_index) + "] " + m.text;
    }
  }
  return out;
}

std::string explain_top(const Claim& claim, const CandidateReference& top,
                        std::size_t paragraph_count, llm::Gateway& gateway, std::string_view summary) {
  if (!top.verifiable) throw Error(Errc::InvalidArgument, "explain_top requires a verifiable candidate");
  auto request = llm::LlmRequest::make(
      llm::TemplateId::Chat,
      {{"summary", std::string(summary)},
       {"claim", claim.sentence},
       {"reference", reference_context(top)},
       {"trace", ""},
       {"history", ""},
       {"message",
        "Explain in at most 120 words how this reference supports or refutes the claim. Cite "
        "the matched paragraphs you rely on as #<index>."}},
      400);
  try {
    auto reply = text::collapse_whitespace(gateway.complete_text(request));
    if (text::word_count(reply) > kExplanationMaxWords) reply = first_words(reply, kExplanationMaxWords);
    if (explanation_cites_valid_paragraph(reply, paragraph_count)) return reply;
    spdlog::info("explanation for {} rejected: no valid paragraph citation", top.record.native_id);
  } catch (const Error& e) {
    spdlog::warn("explanation for {} degraded: {}", top.record.native_id, e.what());
  }
  return extractive_explanation(top);
}

}  // namespace refweave
