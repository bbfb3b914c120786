#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refweave/manuscript.hpp"

namespace refweave {

/// A manuscript plus the claim spans to run discovery on. On disk:
/// `corpus.json` = {"tex": file, "bib": file, "claims": [exact text, ...]}.
struct Corpus {
  Manuscript manuscript;
  std::vector<Selection> selections;
};

Corpus load_corpus(const std::filesystem::path& corpus_json);

/// "start:end" in code points.
std::pair<std::size_t, std::size_t> parse_span(std::string_view span);

std::string read_file(const std::filesystem::path& file);

}  // namespace refweave
