#include "refweave/repositories.hpp"

#include <cctype>
#include <fstream>
#include <future>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "refweave/bibtex.hpp"
#include "refweave/error.hpp"
#include "refweave/text.hpp"
#include "refweave/xml.hpp"

namespace refweave {

using nlohmann::json;

bool valid_native_id(Repo repo, std::string_view id) {
  static const std::regex kModern(R"(^\d{4}\.\d{4,5}(v\d+)?$)");
  static const std::regex kLegacy(R"(^[a-z-]+(\.[A-Z]{2})?/\d{7}(v\d+)?$)");
  const std::string s(id);
  if (repo == Repo::Arxiv) return std::regex_match(s, kModern) || std::regex_match(s, kLegacy);
  return s.rfind("10.1101/", 0) == 0 && s.size() > 8;
}

std::string_view to_string(BibSource source) {
  return source == BibSource::ArxivMetadata ? "ARXIV_METADATA" : "DOI_NEGOTIATION";
}

// ---------------------------------------------------------------------------

RawStore::RawStore(std::filesystem::path directory) : dir_(std::move(directory)) {
  std::filesystem::create_directories(dir_);
}

std::string RawStore::put(std::string_view bytes) {
  auto id = text::sha256_hex(bytes);
  std::lock_guard lock(mutex_);
  if (!blobs_.contains(id)) {
    blobs_.emplace(id, std::string(bytes));
    if (!dir_.empty()) {
      std::ofstream out(dir_ / id, std::ios::binary);
      out << bytes;
    }
  }
  return id;
}

std::optional<std::string> RawStore::get(std::string_view id) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = blobs_.find(id); it != blobs_.end()) return it->second;
  }
  if (!dir_.empty()) {
    std::ifstream in(dir_ / std::string(id), std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }
  }
  return std::nullopt;
}

bool RawStore::contains(std::string_view id) const { return get(id).has_value(); }

// ---------------------------------------------------------------------------

namespace {

http::Response search_request(NetContext& net, const std::string& url, std::string_view repo_name) {
  http::Request req;
  req.url = url;
  req.headers = {{"Accept", "application/atom+xml, application/json"}};
  const auto outcome = send_with_retry(net.transport, req, net.retry, net.sleeper);
  if (!outcome.response || !outcome.response->ok()) {
    throw Error(Errc::RepoUnavailable, std::string(repo_name) + ": " + outcome.last_error + " after " +
                                           std::to_string(outcome.attempts) + " attempt(s)");
  }
  return *outcome.response;
}

std::string arxiv_id_from_url(std::string_view url) {
  const auto pos = url.find("/abs/");
  return std::string(pos == std::string_view::npos ? url : url.substr(pos + 5));
}

std::string strip_version(std::string_view id) {
  static const std::regex kVersion(R"(v\d+$)");
  return std::regex_replace(std::string(id), kVersion, "");
}

std::string strip_tags(std::string_view s) {
  std::string out;
  bool in_tag = false;
  for (char c : s) {
    if (c == '<') {
      in_tag = true;
      out.push_back(' ');
    } else if (c == '>') {
      in_tag = false;
    } else if (!in_tag) {
      out.push_back(c);
    }
  }
  return text::collapse_whitespace(out);
}

}  // namespace

std::string ArxivAdapter::query_url(const SearchQuery& query, int limit) {
  return "http://export.arxiv.org/api/query?search_query=all:" + text::url_encode(query.query_string) +
         "&start=0&max_results=" + std::to_string(limit);
}

std::vector<PaperRecord> ArxivAdapter::parse_feed(std::string_view atom,
                                                  std::string_view provenance_id) {
  xml::Element root;
  try {
    root = xml::parse(atom);
  } catch (const xml::ParseError& e) {
    throw Error(Errc::ResponseParseError, std::string("arxiv feed: ") + e.what());
  }
  if (root.name != "feed") throw Error(Errc::ResponseParseError, "arxiv: root is not an Atom feed");

  std::vector<PaperRecord> records;
  for (const auto* entry : root.children_named("entry")) {
    const auto* id = entry->child("id");
    if (!id) continue;
    PaperRecord r;
    r.repo = Repo::Arxiv;
    r.native_id = arxiv_id_from_url(text::trim(id->text()));
    if (!valid_native_id(Repo::Arxiv, r.native_id)) continue;  // API error entries
    if (const auto* t = entry->child("title")) r.title = text::collapse_whitespace(t->text());
    if (const auto* s = entry->child("summary")) r.abstract = text::collapse_whitespace(s->text());
    if (const auto* p = entry->child("published")) r.published = text::trim(p->text()).substr(0, 10);
    for (const auto* a : entry->children_named("author")) {
      if (const auto* n = a->child("name")) r.authors.push_back(text::collapse_whitespace(n->text()));
    }
    for (const auto* link : entry->children_named("link")) {
      if (link->attr("title") == "pdf" || link->attr("type") == "application/pdf") {
        r.pdf_url = link->attr("href");
      }
    }
    if (const auto* cat = entry->child("primary_category")) {
      r.primary_category = cat->attr("term").value_or("");
    }
    r.provenance_id = std::string(provenance_id);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PaperRecord> ArxivAdapter::search(const SearchQuery& query, int limit) {
  const auto response = search_request(net_, query_url(query, limit), "arxiv");
  const auto provenance = net_.raw_store.put(response.body);
  auto records = parse_feed(response.body, provenance);
  if (records.size() > static_cast<std::size_t>(limit)) records.resize(limit);
  return records;
}

// ---------------------------------------------------------------------------

std::string CrossrefRxivBackend::query_url(const SearchQuery& query, int rows) {
  return "https://api.crossref.org/works?query=" + text::url_encode(query.query_string) +
         "&filter=prefix:10.1101,type:posted-content&rows=" + std::to_string(rows);
}

std::set<std::string> CrossrefRxivBackend::hosts() const {
  return {"api.crossref.org", "www.biorxiv.org", "www.medrxiv.org"};
}

std::vector<PaperRecord> CrossrefRxivBackend::parse_works(std::string_view body, Repo repo,
                                                          std::string_view provenance_id) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(Errc::ResponseParseError, std::string("crossref: ") + e.what());
  }
  if (!doc.contains("message") || !doc["message"].contains("items") ||
      !doc["message"]["items"].is_array()) {
    throw Error(Errc::ResponseParseError, "crossref: missing message.items");
  }
  const auto wanted = text::lower_ascii(to_string(repo));
  std::vector<PaperRecord> records;
  for (const auto& item : doc["message"]["items"]) {
    std::string institution;
    if (item.contains("institution") && item["institution"].is_array() && !item["institution"].empty()) {
      institution = text::lower_ascii(item["institution"][0].value("name", ""));
    }
    if (institution != wanted) continue;
    PaperRecord r;
    r.repo = repo;
    r.native_id = text::lower_ascii(item.value("DOI", ""));
    if (!valid_native_id(repo, r.native_id)) continue;
    if (item.contains("title") && item["title"].is_array() && !item["title"].empty()) {
      r.title = text::collapse_whitespace(item["title"][0].get<std::string>());
    }
    r.abstract = strip_tags(item.value("abstract", ""));
    if (item.contains("author")) {
      for (const auto& a : item["author"]) {
        r.authors.push_back(text::trim(a.value("given", "") + " " + a.value("family", "")));
      }
    }
    for (const char* field : {"posted", "created", "issued"}) {
      if (!item.contains(field)) continue;
      const auto& parts = item[field].value("date-parts", json::array());
      if (parts.empty() || parts[0].empty()) continue;
      char buf[16];
      const int y = parts[0][0].get<int>();
      const int m = parts[0].size() > 1 ? parts[0][1].get<int>() : 1;
      const int d = parts[0].size() > 2 ? parts[0][2].get<int>() : 1;
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
      r.published = buf;
      break;
    }
    r.pdf_url = "https://www." + wanted + ".org/content/" + r.native_id + ".full.pdf";
    r.provenance_id = std::string(provenance_id);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PaperRecord> CrossrefRxivBackend::search(Repo repo, const SearchQuery& query, int limit) {
  // Both servers share the 10.1101 prefix, so over-fetch before filtering.
  const int rows = std::min(100, limit * 4);
  const auto response = search_request(net_, query_url(query, rows), to_string(repo));
  const auto provenance = net_.raw_store.put(response.body);
  auto records = parse_works(response.body, repo, provenance);
  if (records.size() > static_cast<std::size_t>(limit)) records.resize(limit);
  return records;
}

std::vector<PaperRecord> RxivAdapter::search(const SearchQuery& query, int limit) {
  return backend_.search(repo_, query, limit);
}

// ---------------------------------------------------------------------------

void RepositoryRegistry::add(std::unique_ptr<RepositoryAdapter> adapter) {
  const auto repo = adapter->repo();
  adapters_[repo] = std::move(adapter);
}

RepositoryAdapter* RepositoryRegistry::find(Repo repo) const {
  const auto it = adapters_.find(repo);
  return it == adapters_.end() ? nullptr : it->second.get();
}

std::vector<PaperRecord> search(RepositoryAdapter& adapter, const SearchQuery& query, int limit) {
  if (limit <= 0 || limit > kMaxSearchLimit) {
    throw Error(Errc::InvalidArgument, "search limit must be in 1..50");
  }
  return adapter.search(query, limit);
}

namespace {

struct RepoPass {
  std::vector<PaperRecord> records;
  std::vector<std::string> errors;
  bool all_failed = false;
};

RepoPass run_pass(Repo repo, const std::vector<SearchQuery>& queries, int limit,
                  const RepositoryRegistry& registry) {
  RepoPass pass;
  auto* adapter = registry.find(repo);
  if (!adapter) {
    pass.errors.push_back(std::string(to_string(repo)) + ": no adapter configured");
    pass.all_failed = true;
    return pass;
  }
  std::vector<std::future<std::vector<PaperRecord>>> futures;
  for (const auto& q : queries) {
    futures.push_back(std::async(std::launch::async, [adapter, &q, limit] {
      return search(*adapter, q, limit);
    }));
  }
  std::size_t failures = 0;
  for (auto& f : futures) {
    try {
      for (auto& r : f.get()) pass.records.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.code() == Errc::EgressDenied) throw;
      ++failures;
      pass.errors.push_back(e.what());
      spdlog::warn("search on {} failed: {}", to_string(repo), e.what());
    }
  }
  pass.all_failed = !queries.empty() && failures == queries.size();
  return pass;
}

}  // namespace

FallbackResult search_with_fallback(const RoutingDecision& decision,
                                    const std::vector<SearchQuery>& queries, int limit,
                                    const RepositoryRegistry& registry) {
  FallbackResult result;
  auto primary = run_pass(decision.primary_repo, queries, limit, registry);
  result.errors = primary.errors;
  bool every_attempt_failed = primary.all_failed;
  auto records = std::move(primary.records);
  if (records.empty() && decision.secondary_repo) {
    result.used_secondary = true;
    auto secondary = run_pass(*decision.secondary_repo, queries, limit, registry);
    result.errors.insert(result.errors.end(), secondary.errors.begin(), secondary.errors.end());
    every_attempt_failed = every_attempt_failed && secondary.all_failed;
    records = std::move(secondary.records);
  }
  if (every_attempt_failed) {
    throw Error(Errc::RepoUnavailable, "every repository failed: " + text::join(result.errors, "; "));
  }
  result.records = dedup(records);
  return result;
}

std::vector<PaperRecord> dedup(const std::vector<PaperRecord>& records) {
  std::set<std::string> seen;
  std::vector<PaperRecord> out;
  for (const auto& r : records) {
    if (seen.insert(text::normalize_title(r.title)).second) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string alnum_lower(std::string_view s) {
  std::string out;
  for (char c : text::to_ascii(s)) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::string surname(std::string_view author) {
  const auto comma = author.find(',');
  if (comma != std::string_view::npos) return alnum_lower(author.substr(0, comma));
  const auto words = text::split(text::collapse_whitespace(author), ' ');
  return words.empty() ? std::string() : alnum_lower(words.back());
}

}  // namespace

std::string citation_key(const PaperRecord& record) {
  std::string key = record.authors.empty() ? "anon" : surname(record.authors.front());
  if (key.empty()) key = "anon";
  key += record.published.size() >= 4 ? record.published.substr(0, 4) : "nd";
  for (const auto& word : text::split(text::collapse_whitespace(record.title), ' ')) {
    const auto w = alnum_lower(word);
    if (!w.empty()) {
      key += w;
      break;
    }
  }
  return key;
}

BibTexEntry arxiv_bibtex(const PaperRecord& record) {
  BibTexEntry entry;
  entry.key = citation_key(record);
  entry.entry_type = "misc";
  entry.source = BibSource::ArxivMetadata;
  const auto eprint = strip_version(record.native_id);
  std::vector<bibtex::Field> fields = {
      {"title", "{" + record.title + "}"},
      {"author", text::join(record.authors, " and ")},
      {"year", record.published.substr(0, 4)},
      {"eprint", eprint},
      {"archiveprefix", "arXiv"},
  };
  if (!record.primary_category.empty()) fields.push_back({"primaryclass", record.primary_category});
  fields.push_back({"url", "https://arxiv.org/abs/" + eprint});
  entry.raw = bibtex::format(entry.entry_type, entry.key, fields);
  return entry;
}

BibTexEntry fetch_bibtex(const PaperRecord& record, NetContext& net) {
  if (!valid_native_id(record.repo, record.native_id)) {
    throw Error(Errc::InvalidArgument, "invalid native id '" + record.native_id + "'");
  }
  if (record.repo == Repo::Arxiv) return arxiv_bibtex(record);

  http::Request req;
  req.url = "https://doi.org/" + record.native_id;
  req.headers = {{"Accept", "application/x-bibtex"}};
  const auto outcome = send_with_retry(net.transport, req, net.retry, net.sleeper);
  if (!outcome.response || !outcome.response->ok()) {
    throw Error(Errc::BibUnavailable, "doi.org negotiation for " + record.native_id + ": " +
                                          outcome.last_error);
  }
  const auto parsed = bibtex::parse_single(outcome.response->body);
  const auto title = parsed.field("title");
  if (!title || text::trim(*title).empty()) {
    throw Error(Errc::BibParseError, "negotiated entry for " + record.native_id + " has no title");
  }
  BibTexEntry entry;
  entry.key = citation_key(record);
  entry.entry_type = parsed.type;
  entry.source = BibSource::DoiNegotiation;
  entry.raw = bibtex::rekey(parsed.raw, entry.key);
  return entry;
}

}  // namespace refweave
