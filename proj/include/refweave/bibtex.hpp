#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refweave::bibtex {

struct Field {
  std::string name;   // lowercased
  std::string value;  // outer braces/quotes removed, concatenations joined
};

struct Entry {
  std::string type;  // lowercased, e.g. "article"
  std::string key;
  std::vector<Field> fields;
  std::string raw;  // exact source text from '@' to the closing delimiter

  std::optional<std::string> field(std::string_view name) const;
};

/// Parses every regular entry; @comment, @preamble and @string blocks are
/// skipped. Throws Error{BibParseError}.
std::vector<Entry> parse(std::string_view source);

/// Requires exactly one regular entry.
Entry parse_single(std::string_view source);

/// Returns `raw` with the citation key replaced.
std::string rekey(std::string_view raw, std::string_view new_key);

/// Canonical multi-line rendering: `@type{key,\n  name = {value},\n}`.
std::string format(std::string_view type, std::string_view key,
                   const std::vector<Field>& fields);

}  // namespace refweave::bibtex
