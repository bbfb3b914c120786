#include "refweave/routing.hpp"

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave {

std::string_view to_string(Repo repo) {
  switch (repo) {
    case Repo::Arxiv: return "arxiv";
    case Repo::Biorxiv: return "biorxiv";
    case Repo::Medrxiv: return "medrxiv";
  }
  return "arxiv";
}

std::optional<Repo> repo_from_string(std::string_view name) {
  const auto v = text::lower_ascii(text::trim(name));
  if (v == "arxiv") return Repo::Arxiv;
  if (v == "biorxiv") return Repo::Biorxiv;
  if (v == "medrxiv") return Repo::Medrxiv;
  return std::nullopt;
}

RoutingDecision postprocess(RoutingDecision decision) {
  if (decision.secondary_repo == decision.primary_repo) decision.secondary_repo.reset();
  if (decision.confidence < kCrossDisciplinaryThreshold && !decision.secondary_repo) {
    for (auto repo : {Repo::Arxiv, Repo::Biorxiv, Repo::Medrxiv}) {
      if (repo != decision.primary_repo) {
        decision.secondary_repo = repo;
        break;
      }
    }
  }
  return decision;
}

RoutingDecision route(const std::vector<Claim>& claims, const DocumentSchema& schema,
                      llm::Gateway& gateway) {
  if (claims.empty()) throw Error(Errc::InvalidArgument, "route requires at least one claim");
  std::vector<std::string> sentences;
  for (const auto& c : claims) sentences.push_back(c.sentence);
  auto request = llm::LlmRequest::make(
      llm::TemplateId::Route,
      {{"summary", schema.summary}, {"claims", llm::numbered_lines(sentences)}}, 512);
  const auto response = gateway.complete_structured(request, "routing");
  const auto& doc = *response.parsed;

  RoutingDecision decision;
  decision.primary_repo = *repo_from_string(doc["primary_repo"].get<std::string>());
  decision.secondary_repo = repo_from_string(doc["secondary_repo"].get<std::string>());
  decision.confidence = doc["confidence"].get<double>();
  decision.reasoning = doc["reasoning"].get<std::string>();
  return postprocess(std::move(decision));
}

}  // namespace refweave
