#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refweave {

inline constexpr std::size_t kSummaryMaxChars = 2000;

struct DocumentSchema {
  std::string title;
  std::string abstract;
  std::vector<std::string> section_headings;
  std::string summary;  // deterministic, at most kSummaryMaxChars code points
};

/// A highlighted span S. Offsets count Unicode scalar values into tex_source.
struct Selection {
  std::size_t start_offset = 0;
  std::size_t end_offset = 0;
  std::string text;
  std::string surrounding_paragraph;
};

struct Claim {
  std::string sentence;
  std::size_t index_in_selection = 0;
};

/// The editing context at a given revision.
struct Manuscript {
  std::string tex_source;
  std::string bib_path = "references.bib";
  std::string bib_source;
  DocumentSchema schema;
  std::uint64_t revision = 0;
};

DocumentSchema extract_schema(std::string_view tex_source);

/// Builds a manuscript and its schema; throws MalformedLatex or BibParseError.
Manuscript load_manuscript(std::string tex_source, std::string bib_source,
                           std::string bib_path = "references.bib");

/// Validates the offsets against the manuscript and resolves the enclosing
/// paragraph. Throws InvalidSelection.
Selection make_selection(const Manuscript& manuscript, std::size_t start_offset,
                         std::size_t end_offset);

/// Finds the first occurrence of `needle` and selects it.
Selection select_text(const Manuscript& manuscript, std::string_view needle);

struct SegmenterOptions {
  std::vector<std::string> abbreviations = {
      "e.g.", "i.e.", "et al.", "Fig.", "Figs.", "Eq.", "Eqs.", "Sec.", "Tab.", "cf.",
      "vs.",  "Dr.",  "Mr.",    "Ms.",  "Prof.", "No.", "approx.", "resp.", "Ref.", "Refs."};
};

std::vector<Claim> segment_sentences(const Selection& selection,
                                     const SegmenterOptions& options = {});
std::vector<Claim> segment_text(std::string_view text, const SegmenterOptions& options = {});

struct CitationInsertion {
  Manuscript manuscript;
  std::string cite_key;  // key actually used, possibly suffixed
  bool bib_appended = false;
};

/// Inserts `~\cite{key}` at the end of the selection (before one trailing
/// `.`, `,` or `;`) and appends the entry unless an identical one exists.
CitationInsertion insert_citation(const Manuscript& manuscript, const Selection& selection,
                                  std::string_view cite_key, std::string_view bibtex);

/// Keys referenced by \cite, \citep and \citet commands, in order.
std::vector<std::string> cite_keys(std::string_view tex_source);

/// Crude markup removal used for titles, abstracts and headings.
std::string latex_to_plain(std::string_view latex);

std::string strip_comments(std::string_view tex_source);

}  // namespace refweave
