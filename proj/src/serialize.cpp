#include "refweave/serialize.hpp"

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave {

using nlohmann::json;

namespace {

Repo parse_repo(const std::string& name) {
  auto repo = repo_from_string(name);
  if (!repo) throw Error(Errc::InvalidArgument, "unknown repository " + name);
  return *repo;
}

}  // namespace

void to_json(json& j, const DocumentSchema& v) {
  j = {{"title", v.title},
       {"abstract", v.abstract},
       {"section_headings", v.section_headings},
       {"summary", v.summary}};
}

void from_json(const json& j, DocumentSchema& v) {
  j.at("title").get_to(v.title);
  j.at("abstract").get_to(v.abstract);
  j.at("section_headings").get_to(v.section_headings);
  j.at("summary").get_to(v.summary);
}

void to_json(json& j, const Selection& v) {
  j = {{"start_offset", v.start_offset},
       {"end_offset", v.end_offset},
       {"text", v.text},
       {"surrounding_paragraph", v.surrounding_paragraph}};
}

void from_json(const json& j, Selection& v) {
  j.at("start_offset").get_to(v.start_offset);
  j.at("end_offset").get_to(v.end_offset);
  j.at("text").get_to(v.text);
  j.at("surrounding_paragraph").get_to(v.surrounding_paragraph);
}

void to_json(json& j, const Claim& v) {
  j = {{"sentence", v.sentence}, {"index_in_selection", v.index_in_selection}};
}

void from_json(const json& j, Claim& v) {
  j.at("sentence").get_to(v.sentence);
  j.at("index_in_selection").get_to(v.index_in_selection);
}

void to_json(json& j, const Manuscript& v) {
  j = {{"tex_source", v.tex_source},
       {"bib_path", v.bib_path},
       {"bib_source", v.bib_source},
       {"schema", v.schema},
       {"revision", v.revision}};
}

void from_json(const json& j, Manuscript& v) {
  j.at("tex_source").get_to(v.tex_source);
  j.at("bib_path").get_to(v.bib_path);
  j.at("bib_source").get_to(v.bib_source);
  j.at("schema").get_to(v.schema);
  j.at("revision").get_to(v.revision);
}

void to_json(json& j, const RoutingDecision& v) {
  j = {{"primary_repo", to_string(v.primary_repo)},
       {"secondary_repo", v.secondary_repo ? json(to_string(*v.secondary_repo)) : json("none")},
       {"confidence", v.confidence},
       {"reasoning", v.reasoning}};
}

void from_json(const json& j, RoutingDecision& v) {
  v.primary_repo = parse_repo(j.at("primary_repo").get<std::string>());
  const auto secondary = j.at("secondary_repo").get<std::string>();
  v.secondary_repo = secondary == "none" ? std::nullopt : std::optional(parse_repo(secondary));
  j.at("confidence").get_to(v.confidence);
  j.at("reasoning").get_to(v.reasoning);
}

void to_json(json& j, const SearchQuery& v) {
  j = {{"claim_index", v.claim_index},
       {"keywords", v.keywords},
       {"query_string", v.query_string},
       {"variant", to_string(v.variant)}};
}

void from_json(const json& j, SearchQuery& v) {
  j.at("claim_index").get_to(v.claim_index);
  j.at("keywords").get_to(v.keywords);
  j.at("query_string").get_to(v.query_string);
  v.variant = query_variant_from_string(j.at("variant").get<std::string>());
}

void to_json(json& j, const PaperRecord& v) {
  j = {{"repo", to_string(v.repo)},
       {"native_id", v.native_id},
       {"title", v.title},
       {"authors", v.authors},
       {"abstract", v.abstract},
       {"pdf_url", v.pdf_url ? json(*v.pdf_url) : json(nullptr)},
       {"published", v.published},
       {"primary_category", v.primary_category},
       {"provenance_id", v.provenance_id}};
}

void from_json(const json& j, PaperRecord& v) {
  v.repo = parse_repo(j.at("repo").get<std::string>());
  j.at("native_id").get_to(v.native_id);
  j.at("title").get_to(v.title);
  j.at("authors").get_to(v.authors);
  j.at("abstract").get_to(v.abstract);
  if (j.at("pdf_url").is_string()) {
    v.pdf_url = j.at("pdf_url").get<std::string>();
  } else {
    v.pdf_url.reset();
  }
  j.at("published").get_to(v.published);
  j.at("primary_category").get_to(v.primary_category);
  j.at("provenance_id").get_to(v.provenance_id);
}

void to_json(json& j, const BibTexEntry& v) {
  j = {{"key", v.key}, {"entry_type", v.entry_type}, {"raw", v.raw}, {"source", to_string(v.source)}};
}

void from_json(const json& j, BibTexEntry& v) {
  j.at("key").get_to(v.key);
  j.at("entry_type").get_to(v.entry_type);
  j.at("raw").get_to(v.raw);
  v.source = j.at("source").get<std::string>() == to_string(BibSource::DoiNegotiation)
                 ? BibSource::DoiNegotiation
                 : BibSource::ArxivMetadata;
}

void to_json(json& j, const ParagraphMatch& v) {
  j = {{"paragraph_index", v.paragraph_index},
       {"score", v.score},
       {"rationale", v.rationale},
       {"text", v.text}};
}

void from_json(const json& j, ParagraphMatch& v) {
  j.at("paragraph_index").get_to(v.paragraph_index);
  j.at("score").get_to(v.score);
  j.at("rationale").get_to(v.rationale);
  j.at("text").get_to(v.text);
}

void to_json(json& j, const CandidateReference& v) {
  j = {{"record", v.record},
       {"bibtex", v.bibtex},
       {"overall_relevance", v.overall_relevance},
       {"matches", v.matches},
       {"verifiable", v.verifiable},
       {"explanation", v.explanation},
       {"status_note", v.status_note}};
}

void from_json(const json& j, CandidateReference& v) {
  j.at("record").get_to(v.record);
  j.at("bibtex").get_to(v.bibtex);
  j.at("overall_relevance").get_to(v.overall_relevance);
  j.at("matches").get_to(v.matches);
  j.at("verifiable").get_to(v.verifiable);
  j.at("explanation").get_to(v.explanation);
  j.at("status_note").get_to(v.status_note);
}

void to_json(json& j, const PipelineTrace& v) {
  j = {{"claims", v.claims},
       {"routing", v.routing},
       {"queries", v.queries},
       {"used_secondary", v.used_secondary},
       {"notes", v.notes}};
}

void from_json(const json& j, PipelineTrace& v) {
  j.at("claims").get_to(v.claims);
  j.at("routing").get_to(v.routing);
  j.at("queries").get_to(v.queries);
  j.at("used_secondary").get_to(v.used_secondary);
  j.at("notes").get_to(v.notes);
}

void to_json(json& j, const DiscoveryResult& v) {
  j = {{"claim", v.claim},
       {"candidates", v.candidates},
       {"top", v.top ? json(*v.top) : json(nullptr)},
       {"created_at", v.created_at},
       {"pipeline_trace", v.trace}};
}

void from_json(const json& j, DiscoveryResult& v) {
  j.at("claim").get_to(v.claim);
  j.at("candidates").get_to(v.candidates);
  if (j.at("top").is_number()) {
    v.top = j.at("top").get<std::size_t>();
  } else {
    v.top.reset();
  }
  j.at("created_at").get_to(v.created_at);
  j.at("pipeline_trace").get_to(v.trace);
}

void to_json(json& j, const ChatTurn& v) { j = {{"role", to_string(v.role)}, {"text", v.text}}; }

void from_json(const json& j, ChatTurn& v) {
  v.role = role_from_string(j.at("role").get<std::string>());
  j.at("text").get_to(v.text);
}

void to_json(json& j, const ChatContext& v) {
  j = {{"paper_summary", v.paper_summary},
       {"reference", v.reference},
       {"metadata", {{"trace", v.metadata.trace}, {"claim", v.metadata.claim}}},
       {"turns", v.turns}};
}

void from_json(const json& j, ChatContext& v) {
  j.at("paper_summary").get_to(v.paper_summary);
  j.at("reference").get_to(v.reference);
  j.at("metadata").at("trace").get_to(v.metadata.trace);
  j.at("metadata").at("claim").get_to(v.metadata.claim);
  j.at("turns").get_to(v.turns);
}

std::string result_digest(const DiscoveryResult& result) {
  json j = result;
  j.erase("created_at");
  return text::sha256_hex(j.dump());
}

}  // namespace refweave
