#include "refweave/text.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <set>

#include <openssl/sha.h>
#include <unicode/normalizer2.h>
#include <unicode/translit.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "refweave/error.hpp"

namespace refweave::text {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::size_t codepoint_length(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::size_t byte_offset(std::string_view utf8, std::size_t cp_index) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < utf8.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(utf8[i]))) continue;
    if (seen == cp_index) return i;
    ++seen;
  }
  if (seen == cp_index) return utf8.size();
  throw Error(Errc::InvalidSelection, "offset " + std::to_string(cp_index) + " beyond text length " +
                                          std::to_string(seen));
}

std::size_t codepoint_offset(std::string_view utf8, std::size_t byte_index) {
  return codepoint_length(utf8.substr(0, std::min(byte_index, utf8.size())));
}

std::string substr_cp(std::string_view utf8, std::size_t start, std::size_t end) {
  const auto b = byte_offset(utf8, start);
  const auto e = byte_offset(utf8, end);
  return std::string(utf8.substr(b, e - b));
}

std::string truncate_cp(std::string_view utf8, std::size_t max_cp) {
  if (codepoint_length(utf8) <= max_cp) return std::string(utf8);
  return std::string(utf8.substr(0, byte_offset(utf8, max_cp)));
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
  });
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      break;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string nfkc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const auto* norm = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) return std::string(utf8);
  auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  auto dst = norm->normalize(src, status);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  dst.toUTF8String(out);
  return out;
}

std::string normalize_title(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const auto* norm = icu::Normalizer2::getNFKCInstance(status);
  auto s = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (U_SUCCESS(status)) s = norm->normalize(s, status);
  s.foldCase();
  icu::UnicodeString kept;
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    if (u_ispunct(c)) continue;
    if (u_isUWhiteSpace(c)) {
      kept.append(UChar32(' '));
    } else {
      kept.append(c);
    }
  }
  std::string out;
  kept.toUTF8String(out);
  return collapse_whitespace(out);
}

std::string to_ascii(std::string_view utf8) {
  thread_local std::unique_ptr<icu::Transliterator> translit = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::Transliterator> t(
        icu::Transliterator::createInstance("Any-Latin; Latin-ASCII", UTRANS_FORWARD, status));
    if (U_FAILURE(status)) t.reset();
    return t;
  }();
  auto s = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (translit) translit->transliterate(s);
  std::string converted;
  s.toUTF8String(converted);
  std::string out;
  for (unsigned char c : converted) {
    if (c < 0x80) out.push_back(static_cast<char>(c));
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

bool is_stopword(std::string_view t) {
  static const std::set<std::string_view> kStop = {
      "a",     "an",    "and",   "are",   "as",    "at",    "be",    "been",  "but",   "by",
      "can",   "do",    "does",  "for",   "from",  "has",   "have",  "how",   "in",    "into",
      "is",    "it",    "its",   "more",  "most",  "not",   "of",    "on",    "or",    "our",
      "over",  "such",  "than",  "that",  "the",   "their", "them",  "these", "they",  "this",
      "those", "to",    "under", "was",   "we",    "were",  "what",  "when",  "which", "while",
      "who",   "will",  "with",  "within", "without", "also", "both", "each", "other", "using",
      "via",   "may",   "many",  "much",  "only",  "very",  "while", "there", "here", "where",
      "then",  "so",    "if",    "no",    "yes",   "all",   "any",   "some",  "one",   "two",
      "show",  "shows", "shown", "showed", "rely", "relies", "use",  "used",  "uses",  "et", "al",
      "eg",    "ie",    "every", "same",  "now",   "often", "own",   "would", "should",
      "could", "after", "before", "because", "between", "about", "among", "per", "just", "well"};
  return kStop.contains(t);
}

std::vector<std::string> content_tokens(std::string_view s) {
  const auto ascii = lower_ascii(to_ascii(s));
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() > 1 && !is_stopword(cur)) tokens.push_back(cur);
    cur.clear();
  };
  for (char c : ascii) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
        c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else if (c == ' ') {
      out.push_back('+');
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace refweave::text
