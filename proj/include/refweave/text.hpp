#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 and normalization helpers shared by the parsers. Offsets exposed to
// callers are counted in Unicode scalar values, never bytes.
namespace refweave::text {

std::size_t codepoint_length(std::string_view utf8);

/// Byte offset of the code point at `cp_index`; `cp_index == length` maps to
/// `utf8.size()`. Throws InvalidSelection past the end.
std::size_t byte_offset(std::string_view utf8, std::size_t cp_index);

/// Code point index of a byte offset that lies on a character boundary.
std::size_t codepoint_offset(std::string_view utf8, std::size_t byte_index);

std::string substr_cp(std::string_view utf8, std::size_t start, std::size_t end);

/// Truncates to at most `max_cp` code points.
std::string truncate_cp(std::string_view utf8, std::size_t max_cp);

bool is_space(char c);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string lower_ascii(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string nfkc(std::string_view utf8);

/// Title key used for deduplication: NFKC, case-folded, punctuation removed,
/// whitespace collapsed.
std::string normalize_title(std::string_view utf8);

/// Latin transliteration down to printable ASCII ("Müller" -> "Muller").
std::string to_ascii(std::string_view utf8);

std::string sha256_hex(std::string_view bytes);

/// Lowercase ASCII alphanumeric tokens; stopwords and one-character tokens
/// are dropped.
std::vector<std::string> content_tokens(std::string_view s);
bool is_stopword(std::string_view lower_token);

std::size_t word_count(std::string_view s);

std::string url_encode(std::string_view s);

}  // namespace refweave::text
