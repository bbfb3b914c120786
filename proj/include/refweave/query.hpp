#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "refweave/llm.hpp"
#include "refweave/manuscript.hpp"

namespace refweave {

enum class QueryVariant { RawSentence, KeywordsOnly, ContextAware };

std::string_view to_string(QueryVariant variant);
QueryVariant query_variant_from_string(std::string_view name);

inline constexpr std::size_t kMaxKeywords = 8;
inline constexpr std::size_t kMaxQueryChars = 512;

struct SearchQuery {
  std::size_t claim_index = 0;
  std::vector<std::string> keywords;  // technical terms first, then concepts
  std::string query_string;
  QueryVariant variant = QueryVariant::ContextAware;
};

/// Keeps letters, digits, hyphens and single spaces; drops quotes and the
/// boolean operators AND/OR/NOT.
std::string sanitize_keyword(std::string_view keyword);

/// RawSentence makes no gateway call; the keyword variants make exactly one
/// batched KEYWORDS call for all claims.
std::vector<SearchQuery> build_queries(const std::vector<Claim>& claims,
                                       const DocumentSchema& schema, std::string_view surrounding,
                                       QueryVariant variant, llm::Gateway& gateway);

}  // namespace refweave
