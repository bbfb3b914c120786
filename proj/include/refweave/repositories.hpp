#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refweave/http.hpp"
#include "refweave/query.hpp"
#include "refweave/retry.hpp"
#include "refweave/routing.hpp"

namespace refweave {

struct PaperRecord {
  Repo repo = Repo::Arxiv;
  std::string native_id;  // arXiv ID or DOI
  std::string title;
  std::vector<std::string> authors;
  std::string abstract;
  std::optional<std::string> pdf_url;
  std::string published;  // YYYY-MM-DD
  std::string primary_category;
  /// Id of the raw repository response this record was parsed from.
  std::string provenance_id;
};

bool valid_native_id(Repo repo, std::string_view id);

enum class BibSource { ArxivMetadata, DoiNegotiation };
std::string_view to_string(BibSource source);

struct BibTexEntry {
  std::string key;
  std::string entry_type;
  std::string raw;
  BibSource source = BibSource::ArxivMetadata;
};

/// Content-addressed store of raw upstream bytes (repository responses and
/// TEI). Every PaperRecord points back into it. Optionally mirrored to disk.
class RawStore {
 public:
  RawStore() = default;
  explicit RawStore(std::filesystem::path directory);

  std::string put(std::string_view bytes);
  std::optional<std::string> get(std::string_view id) const;
  bool contains(std::string_view id) const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string, std::less<>> blobs_;
};

/// Everything an outbound call needs: the guarded transport, retry policy,
/// sleeper and the provenance store.
struct NetContext {
  http::Transport& transport;
  RetryPolicy retry;
  Sleeper& sleeper;
  RawStore& raw_store;
};

class RepositoryAdapter {
 public:
  virtual ~RepositoryAdapter() = default;
  virtual Repo repo() const = 0;
  /// Records in repository-native order. Throws RepoUnavailable or
  /// ResponseParseError.
  virtual std::vector<PaperRecord> search(const SearchQuery& query, int limit) = 0;
};

inline constexpr int kMaxSearchLimit = 50;

class ArxivAdapter : public RepositoryAdapter {
 public:
  explicit ArxivAdapter(NetContext net) : net_(net) {}
  Repo repo() const override { return Repo::Arxiv; }
  std::vector<PaperRecord> search(const SearchQuery& query, int limit) override;

  static std::string query_url(const SearchQuery& query, int limit);
  /// Throws ResponseParseError for anything that is not an Atom feed.
  static std::vector<PaperRecord> parse_feed(std::string_view atom, std::string_view provenance_id);

 private:
  NetContext net_;
};

/// Keyword search for bioRxiv/medRxiv goes through a pluggable backend.
class RxivSearchBackend {
 public:
  virtual ~RxivSearchBackend() = default;
  virtual std::vector<PaperRecord> search(Repo repo, const SearchQuery& query, int limit) = 0;
  virtual std::set<std::string> hosts() const = 0;
};

/// Crossref works query restricted to the 10.1101 prefix; the repository is
/// taken from the posting institution.
class CrossrefRxivBackend : public RxivSearchBackend {
 public:
  explicit CrossrefRxivBackend(NetContext net) : net_(net) {}
  std::vector<PaperRecord> search(Repo repo, const SearchQuery& query, int limit) override;
  std::set<std::string> hosts() const override;

  static std::string query_url(const SearchQuery& query, int rows);
  static std::vector<PaperRecord> parse_works(std::string_view body, Repo repo,
                                              std::string_view provenance_id);

 private:
  NetContext net_;
};

class RxivAdapter : public RepositoryAdapter {
 public:
  RxivAdapter(Repo repo, RxivSearchBackend& backend) : repo_(repo), backend_(backend) {}
  Repo repo() const override { return repo_; }
  std::vector<PaperRecord> search(const SearchQuery& query, int limit) override;

 private:
  Repo repo_;
  RxivSearchBackend& backend_;
};

class RepositoryRegistry {
 public:
  void add(std::unique_ptr<RepositoryAdapter> adapter);
  RepositoryAdapter* find(Repo repo) const;

 private:
  std::map<Repo, std::unique_ptr<RepositoryAdapter>> adapters_;
};

/// Validates the limit (1..50) and delegates to the adapter.
std::vector<PaperRecord> search(RepositoryAdapter& adapter, const SearchQuery& query, int limit);

struct FallbackResult {
  std::vector<PaperRecord> records;
  bool used_secondary = false;
  std::vector<std::string> errors;
};

/// Queries the primary concurrently; iff its union is empty and a secondary
/// exists, repeats against the secondary. Each query keeps at most `limit`
/// records; the union is deduplicated.
FallbackResult search_with_fallback(const RoutingDecision& decision,
                                    const std::vector<SearchQuery>& queries, int limit,
                                    const RepositoryRegistry& registry);

/// First occurrence wins; relative order preserved.
std::vector<PaperRecord> dedup(const std::vector<PaperRecord>& records);

/// Lowercase ASCII `<first-author surname><year><first title word>`.
std::string citation_key(const PaperRecord& record);

BibTexEntry arxiv_bibtex(const PaperRecord& record);

/// arXiv: built from metadata. bio/medRxiv: DOI content negotiation, re-keyed.
BibTexEntry fetch_bibtex(const PaperRecord& record, NetContext& net);

}  // namespace refweave
