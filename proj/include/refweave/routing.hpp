#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refweave/llm.hpp"
#include "refweave/manuscript.hpp"

namespace refweave {

enum class Repo { Arxiv, Biorxiv, Medrxiv };

std::string_view to_string(Repo repo);
/// Case-insensitive; nullopt for names outside the allowlist.
std::optional<Repo> repo_from_string(std::string_view name);

inline constexpr double kCrossDisciplinaryThreshold = 0.5;

struct RoutingDecision {
  Repo primary_repo = Repo::Arxiv;
  std::optional<Repo> secondary_repo;  // nullopt is "none"
  double confidence = 0.0;
  std::string reasoning;
};

/// Applies the structural rules to a raw model decision: a secondary equal
/// to the primary becomes none, and below the confidence threshold a
/// secondary is forced from the order arxiv, biorxiv, medrxiv.
RoutingDecision postprocess(RoutingDecision decision);

/// One ROUTE call; unknown repository names are retried as violations.
RoutingDecision route(const std::vector<Claim>& claims, const DocumentSchema& schema,
                      llm::Gateway& gateway);

}  // namespace refweave
