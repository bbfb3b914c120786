#include "refweave/query.hpp"

#include <cctype>
#include <set>

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave {

std::string_view to_string(QueryVariant variant) {
  switch (variant) {
    case QueryVariant::RawSentence: return "RAW_SENTENCE";
    case QueryVariant::KeywordsOnly: return "KEYWORDS_ONLY";
    case QueryVariant::ContextAware: return "CONTEXT_AWARE";
  }
  return "CONTEXT_AWARE";
}

QueryVariant query_variant_from_string(std::string_view name) {
  for (auto v : {QueryVariant::RawSentence, QueryVariant::KeywordsOnly, QueryVariant::ContextAware}) {
    if (to_string(v) == name) return v;
  }
  throw Error(Errc::InvalidArgument, "unknown query variant '" + std::string(name) + "'");
}

std::string sanitize_keyword(std::string_view keyword) {
  std::string kept;
  for (char c : text::to_ascii(keyword)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      kept.push_back(c);
    } else {
      kept.push_back(' ');
    }
  }
  std::vector<std::string> words;
  for (const auto& w : text::split(text::collapse_whitespace(kept), ' ')) {
    if (w.empty() || w == "AND" || w == "OR" || w == "NOT") continue;
    std::string trimmed = w;
    while (!trimmed.empty() && trimmed.front() == '-') trimmed.erase(trimmed.begin());
    while (!trimmed.empty() && trimmed.back() == '-') trimmed.pop_back();
    if (!trimmed.empty()) words.push_back(trimmed);
  }
  return text::join(words, " ");
}

namespace {

std::string assemble(const std::vector<std::string>& keywords, std::vector<std::string>& kept) {
  std::string out;
  for (const auto& k : keywords) {
    const auto next = out.empty() ? k : out + " " + k;
    if (next.size() > kMaxQueryChars) break;
    out = next;
    kept.push_back(k);
  }
  return out;
}

}  // namespace

std::vector<SearchQuery> build_queries(const std::vector<Claim>& claims,
                                       const DocumentSchema& schema, std::string_view surrounding,
                                       QueryVariant variant, llm::Gateway& gateway) {
  if (claims.empty()) throw Error(Errc::InvalidArgument, "build_queries requires claims");
  std::vector<SearchQuery> queries;

  if (variant == QueryVariant::RawSentence) {
    for (const auto& c : claims) {
      SearchQuery q;
      q.claim_index = c.index_in_selection;
      q.variant = variant;
      q.query_string = text::truncate_cp(text::collapse_whitespace(c.sentence), kMaxQueryChars);
      queries.push_back(std::move(q));
    }
    return queries;
  }

  std::vector<std::string> sentences;
  for (const auto& c : claims) sentences.push_back(text::collapse_whitespace(c.sentence));
  const bool with_context = variant == QueryVariant::ContextAware;
  auto request = llm::LlmRequest::make(
      llm::TemplateId::Keywords,
      {{"summary", with_context ? schema.summary : std::string()},
       {"surrounding", with_context ? text::collapse_whitespace(surrounding) : std::string()},
       {"sentences", llm::numbered_lines(sentences)}},
      1024);

  const auto expected = claims.size();
  // Sanitised lists must be non-empty for every claim, otherwise the model
  // is asked again.
  llm::Validator shape = [expected](const nlohmann::json& doc) -> std::optional<llm::Violation> {
    const auto& items = doc["claims"];
    if (items.size() != expected) {
      return llm::Violation{Errc::BatchShapeMismatch,
                            "expected " + std::to_string(expected) + " keyword lists, got " +
                                std::to_string(items.size())};
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      bool any = false;
      for (const char* field : {"technical_terms", "concepts"}) {
        for (const auto& k : items[i][field]) any = any || !sanitize_keyword(k.get<std::string>()).empty();
      }
      if (!any) {
        return llm::Violation{Errc::SchemaViolation,
                              "keyword list " + std::to_string(i) + " is empty"};
      }
    }
    return std::nullopt;
  };
  const auto response = gateway.complete_structured(request, "keywords", shape);
  const auto& items = (*response.parsed)["claims"];

  for (std::size_t i = 0; i < claims.size(); ++i) {
    std::vector<std::string> ordered;
    std::set<std::string> seen;
    for (const char* field : {"technical_terms", "concepts"}) {
      for (const auto& raw : items[i][field]) {
        auto k = sanitize_keyword(raw.get<std::string>());
        if (k.empty() || !seen.insert(text::lower_ascii(k)).second) continue;
        if (ordered.size() < kMaxKeywords) ordered.push_back(std::move(k));
      }
    }
    SearchQuery q;
    q.claim_index = claims[i].index_in_selection;
    q.variant = variant;
    q.query_string = assemble(ordered, q.keywords);
    queries.push_back(std::move(q));
  }
  return queries;
}

}  // namespace refweave
