#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refweave {

enum class Errc {
  MalformedLatex,
  EmptySelection,
  InvalidSelection,
  KeyBibMismatch,
  BibParseError,
  ProviderUnreachable,
  SchemaViolation,
  ProviderRefusal,
  InvalidRepoName,
  BatchShapeMismatch,
  RepoUnavailable,
  ResponseParseError,
  BibUnavailable,
  PdfUnavailable,
  NotAPdf,
  GrobidUnavailable,
  TeiParseError,
  EmptyDocument,
  NoParagraphs,
  NoSuchCandidate,
  NoJudgments,
  EgressDenied,
  NetworkError,
  InvalidArgument,
  ConfigError,
  NotFound,
  Conflict,
};

std::string_view to_string(Errc code);

/// Every failure surfaced by the engine carries one of the codes above so
/// callers (and the HTTP layer) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace refweave
