#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "refweave/chat.hpp"
#include "refweave/manuscript.hpp"
#include "refweave/matching.hpp"

namespace refweave {

void to_json(nlohmann::json& j, const DocumentSchema& v);
void from_json(const nlohmann::json& j, DocumentSchema& v);
void to_json(nlohmann::json& j, const Selection& v);
void from_json(const nlohmann::json& j, Selection& v);
void to_json(nlohmann::json& j, const Claim& v);
void from_json(const nlohmann::json& j, Claim& v);
void to_json(nlohmann::json& j, const Manuscript& v);
void from_json(const nlohmann::json& j, Manuscript& v);
void to_json(nlohmann::json& j, const RoutingDecision& v);
void from_json(const nlohmann::json& j, RoutingDecision& v);
void to_json(nlohmann::json& j, const SearchQuery& v);
void from_json(const nlohmann::json& j, SearchQuery& v);
void to_json(nlohmann::json& j, const PaperRecord& v);
void from_json(const nlohmann::json& j, PaperRecord& v);
void to_json(nlohmann::json& j, const BibTexEntry& v);
void from_json(const nlohmann::json& j, BibTexEntry& v);
void to_json(nlohmann::json& j, const ParagraphMatch& v);
void from_json(const nlohmann::json& j, ParagraphMatch& v);
void to_json(nlohmann::json& j, const CandidateReference& v);
void from_json(const nlohmann::json& j, CandidateReference& v);
void to_json(nlohmann::json& j, const PipelineTrace& v);
void from_json(const nlohmann::json& j, PipelineTrace& v);
void to_json(nlohmann::json& j, const DiscoveryResult& v);
void from_json(const nlohmann::json& j, DiscoveryResult& v);
void to_json(nlohmann::json& j, const ChatTurn& v);
void from_json(const nlohmann::json& j, ChatTurn& v);
void to_json(nlohmann::json& j, const ChatContext& v);
void from_json(const nlohmann::json& j, ChatContext& v);

/// sha256 of the canonical result JSON without created_at.
std::string result_digest(const DiscoveryResult& result);

}  // namespace refweave
