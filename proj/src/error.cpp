#include "refweave/error.hpp"

namespace refweave {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedLatex: return "MalformedLatex";
    case Errc::EmptySelection: return "EmptySelection";
    case Errc::InvalidSelection: return "InvalidSelection";
    case Errc::KeyBibMismatch: return "KeyBibMismatch";
    case Errc::BibParseError: return "BibParseError";
    case Errc::ProviderUnreachable: return "ProviderUnreachable";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::ProviderRefusal: return "ProviderRefusal";
    case Errc::InvalidRepoName: return "InvalidRepoName";
    case Errc::BatchShapeMismatch: return "BatchShapeMismatch";
    case Errc::RepoUnavailable: return "RepoUnavailable";
    case Errc::ResponseParseError: return "ResponseParseError";
    case Errc::BibUnavailable: return "BibUnavailable";
    case Errc::PdfUnavailable: return "PdfUnavailable";
    case Errc::NotAPdf: return "NotAPdf";
    case Errc::GrobidUnavailable: return "GrobidUnavailable";
    case Errc::TeiParseError: return "TeiParseError";
    case Errc::EmptyDocument: return "EmptyDocument";
    case Errc::NoParagraphs: return "NoParagraphs";
    case Errc::NoSuchCandidate: return "NoSuchCandidate";
    case Errc::NoJudgments: return "NoJudgments";
    case Errc::EgressDenied: return "EgressDenied";
    case Errc::NetworkError: return "NetworkError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NotFound: return "NotFound";
    case Errc::Conflict: return "Conflict";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace refweave
