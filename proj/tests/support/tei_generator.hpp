#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace refweave::testing {

/// A random GROBID-shaped TEI document together with the paragraph list a
/// correct parser must produce from it.
struct SyntheticTei {
  std::string xml;
  std::vector<std::string> paragraphs;  // collapsed, decoded, reading order
  std::vector<std::string> headings;    // one per non-empty section
};

/// Deterministic for a given seed. Exercises entities, numeric character
/// references, inline markup, comments, nested divs, figures, whitespace-only
/// paragraphs and paragraphs outside the body.
SyntheticTei generate_tei(std::uint64_t seed);

}  // namespace refweave::testing
