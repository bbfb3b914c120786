#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "refweave/repositories.hpp"

namespace refweave {

struct Section {
  std::string heading;
  std::vector<std::string> paragraphs;
};

struct IndexedParagraph {
  std::size_t global_index = 0;
  std::size_t section_ordinal = 0;
  std::string text;
};

struct ParsedDocument {
  std::string record_ref;  // PaperRecord::native_id
  std::vector<Section> sections;
  std::vector<IndexedParagraph> paragraph_index;  // dense 0..N-1, reading order
  std::string tei_digest;                          // sha256 of the raw TEI
};

inline constexpr std::size_t kDefaultPdfCapBytes = 30u * 1024u * 1024u;

/// Candidate PDF URLs in preference order: the record's link, then the
/// repository's canonical location.
std::vector<std::string> pdf_candidates(const PaperRecord& record);

/// Returns bytes starting with %PDF. Throws PdfUnavailable or NotAPdf.
std::string acquire_pdf(const PaperRecord& record, NetContext& net,
                        std::size_t cap_bytes = kDefaultPdfCapBytes);

/// Maps GROBID TEI to sections and a dense paragraph index. Only body <div>
/// paragraphs are indexed; whitespace-only paragraphs are dropped.
/// Throws TeiParseError or EmptyDocument.
ParsedDocument parse_tei(std::string_view tei, std::string_view record_ref);

/// Decoded, whitespace-collapsed text content of the TEI <body>.
std::string tei_body_text(std::string_view tei);

/// Checks density of the index and that every paragraph occurs verbatim in
/// the TEI body text.
bool verify_parsed_document(const ParsedDocument& doc, std::string_view tei);

class GrobidClient {
 public:
  GrobidClient(NetContext net, std::string base_url,
               std::chrono::seconds timeout = std::chrono::seconds(120));

  /// POST <base>/api/processFulltextDocument; the raw TEI is kept in the
  /// raw store under tei_digest. Throws GrobidUnavailable, TeiParseError,
  /// EmptyDocument.
  ParsedDocument parse_fulltext(std::string_view pdf, std::string_view record_ref);
  bool alive();

  const std::string& base_url() const { return base_url_; }

 private:
  NetContext net_;
  std::string base_url_;
  std::chrono::seconds timeout_;
};

}  // namespace refweave
