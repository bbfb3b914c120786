#include <doctest.h>

#include <atomic>
#include <random>

#include "catalog_upstream.hpp"
#include "refweave/bibtex.hpp"
#include "refweave/error.hpp"
#include "refweave/repositories.hpp"
#include "refweave/text.hpp"
#include "test_env.hpp"

using namespace refweave;
using refweave::testing::CatalogUpstream;

namespace {

struct Fixture {
  CatalogUpstream upstream{testing::load_catalog(testing::catalog_path())};
  RecordingSleeper sleeper;
  RawStore raw;
  RetryPolicy retry{1, 2.0, 3, 0.0};
  NetContext net{upstream, retry, sleeper, raw};
};

SearchQuery query(std::string s) {
  SearchQuery q;
  q.query_string = std::move(s);
  return q;
}

PaperRecord record(std::string title, std::string id = "2101.00001") {
  PaperRecord r;
  r.native_id = std::move(id);
  r.title = std::move(title);
  return r;
}

/// Returns canned records per query string and counts calls.
class CannedAdapter : public RepositoryAdapter {
 public:
  CannedAdapter(Repo repo, std::map<std::string, std::vector<PaperRecord>> answers,
                std::set<std::string> failing = {})
      : repo_(repo), answers_(std::move(answers)), failing_(std::move(failing)) {}
  Repo repo() const override { return repo_; }
  std::vector<PaperRecord> search(const SearchQuery& q, int limit) override {
    ++calls;
    if (failing_.contains(q.query_string)) throw Error(Errc::RepoUnavailable, "down");
    const auto it = answers_.find(q.query_string);
    auto out = it == answers_.end() ? std::vector<PaperRecord>{} : it->second;
    if (out.size() > static_cast<std::size_t>(limit)) out.resize(limit);
    return out;
  }
  std::atomic<int> calls{0};

 private:
  Repo repo_;
  std::map<std::string, std::vector<PaperRecord>> answers_;
  std::set<std::string> failing_;
};

// Quadratic reference: keep a record iff no earlier record has an
// equivalent title.
std::vector<PaperRecord> dedup_oracle(const std::vector<PaperRecord>& in) {
  std::vector<PaperRecord> out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    bool dup = false;
    for (std::size_t j = 0; j < i && !dup; ++j) {
      dup = text::normalize_title(in[j].title) == text::normalize_title(in[i].title);
    }
    if (!dup) out.push_back(in[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("native id formats") {
  CHECK(valid_native_id(Repo::Arxiv, "1706.03762"));
  CHECK(valid_native_id(Repo::Arxiv, "1706.03762v7"));
  CHECK(valid_native_id(Repo::Arxiv, "2301.12345"));
  CHECK(valid_native_id(Repo::Arxiv, "hep-th/9901001v2"));
  CHECK(valid_native_id(Repo::Arxiv, "math.GT/0309136"));
  CHECK_FALSE(valid_native_id(Repo::Arxiv, "1706.037"));
  CHECK_FALSE(valid_native_id(Repo::Arxiv, "http://arxiv.org/api/errors#x"));
  CHECK(valid_native_id(Repo::Biorxiv, "10.1101/2021.04.12.439502"));
  CHECK_FALSE(valid_native_id(Repo::Medrxiv, "10.1038/nature14539"));
}

TEST_CASE("raw store is content addressed and mirrored to disk") {
  testing::TempDir dir;
  std::string id;
  {
    RawStore store(dir.path());
    id = store.put("payload");
    CHECK(id == text::sha256_hex("payload"));
    CHECK(store.put("payload") == id);
    CHECK(store.get(id) == "payload");
    CHECK_FALSE(store.contains("missing"));
  }
  RawStore reopened(dir.path());
  CHECK(reopened.get(id) == "payload");
}

TEST_CASE("arxiv search returns records backed by raw bytes") {
  Fixture f;
  ArxivAdapter arxiv(f.net);
  const auto records = search(arxiv, query("transformers attention"), 5);
  REQUIRE_FALSE(records.empty());
  CHECK(records.size() <= 5);
  CHECK(records[0].native_id == "1706.03762v7");
  CHECK(records[0].title == "Attention Is All You Need");
  CHECK(records[0].authors.front() == "Ashish Vaswani");
  CHECK(records[0].published == "2017-06-12");
  CHECK(records[0].pdf_url.has_value());
  CHECK(records[0].primary_category == "cs.CL");
  for (const auto& r : records) {
    CHECK(r.repo == Repo::Arxiv);
    CHECK(valid_native_id(Repo::Arxiv, r.native_id));
    const auto raw = f.raw.get(r.provenance_id);
    REQUIRE(raw.has_value());
    CHECK(raw->find(r.native_id) != std::string::npos);
  }
  CHECK(search(arxiv, query("transformers attention"), 1).size() == 1);
  CHECK_THROWS_AS(search(arxiv, query("x"), 0), Error);
  CHECK_THROWS_AS(search(arxiv, query("x"), 51), Error);
  CHECK(ArxivAdapter::query_url(query("a b"), 5) ==
        "http://export.arxiv.org/api/query?search_query=all:a+b&start=0&max_results=5");
}

TEST_CASE("feed parsing") {
  try {
    ArxivAdapter::parse_feed("{\"not\": \"xml\"}", "p");
    FAIL("expected ResponseParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ResponseParseError);
  }
  CHECK_THROWS_AS(ArxivAdapter::parse_feed("<html><body/></html>", "p"), Error);
  const auto error_feed = R"(<?xml version="1.0"?>
<feed xmlns="http://www.w3.org/2005/Atom"><entry><id>http://arxiv.org/api/errors#incorrect_id</id>
<title>Error</title></entry></feed>)";
  CHECK(ArxivAdapter::parse_feed(error_feed, "p").empty());
}

TEST_CASE("rxiv search filters by posting server") {
  Fixture f;
  CrossrefRxivBackend backend(f.net);
  RxivAdapter bio(Repo::Biorxiv, backend);
  RxivAdapter med(Repo::Medrxiv, backend);
  const auto crispr = search(bio, query("CRISPR screen genes"), 5);
  REQUIRE_FALSE(crispr.empty());
  for (const auto& r : crispr) {
    CHECK(r.repo == Repo::Biorxiv);
    CHECK(r.native_id.rfind("10.1101/", 0) == 0);
    CHECK(f.upstream.find(r.native_id)->repo == Repo::Biorxiv);
    CHECK(f.raw.get(r.provenance_id)->find(r.native_id) != std::string::npos);
    CHECK(r.pdf_url == "https://www.biorxiv.org/content/" + r.native_id + ".full.pdf");
  }
  const auto vaccine = search(med, query("vaccination hospitalization"), 5);
  REQUIRE_FALSE(vaccine.empty());
  for (const auto& r : vaccine) CHECK(r.repo == Repo::Medrxiv);
  CHECK(search(bio, query("vaccination hospitalization"), 5).empty());
  CHECK(backend.hosts().contains("api.crossref.org"));
  CHECK_THROWS_AS(CrossrefRxivBackend::parse_works("{\"message\":{}}", Repo::Biorxiv, "p"), Error);
}

TEST_CASE("outages become RepoUnavailable after retries") {
  Fixture f;
  ArxivAdapter arxiv(f.net);
  for (int status : {503, 0}) {
    f.upstream.fail_host("export.arxiv.org", status);
    try {
      search(arxiv, query("transformers"), 5);
      FAIL("expected RepoUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::RepoUnavailable);
    }
  }
  CHECK(f.sleeper.delays().size() == 4);
  f.upstream.clear_failures();
  CHECK_FALSE(search(arxiv, query("transformers"), 5).empty());
}

TEST_CASE("secondary repository is searched iff the primary union is empty") {
  const auto hit = record("Primary Hit");
  for (int mask = 0; mask < 8; ++mask) {
    // Bit i: query i returns a record on the primary.
    std::map<std::string, std::vector<PaperRecord>> answers;
    for (int i = 0; i < 3; ++i) {
      if (mask & (1 << i)) answers["q" + std::to_string(i)] = {hit};
    }
    auto primary = std::make_unique<CannedAdapter>(Repo::Arxiv, answers);
    auto secondary = std::make_unique<CannedAdapter>(
        Repo::Biorxiv, std::map<std::string, std::vector<PaperRecord>>{{"q0", {record("Secondary")}}});
    auto* p = primary.get();
    auto* s = secondary.get();
    RepositoryRegistry registry;
    registry.add(std::move(primary));
    registry.add(std::move(secondary));
    const RoutingDecision decision{Repo::Arxiv, Repo::Biorxiv, 0.9, ""};
    const auto result =
        search_with_fallback(decision, {query("q0"), query("q1"), query("q2")}, 5, registry);
    CAPTURE(mask);
    CHECK(p->calls == 3);
    CHECK(result.used_secondary == (mask == 0));
    CHECK(s->calls == (mask == 0 ? 3 : 0));
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].title == (mask == 0 ? "Secondary" : "Primary Hit"));
  }
}

TEST_CASE("fallback error handling") {
  RepositoryRegistry registry;
  registry.add(std::make_unique<CannedAdapter>(
      Repo::Arxiv, std::map<std::string, std::vector<PaperRecord>>{{"ok", {record("A")}}},
      std::set<std::string>{"bad"}));
  const RoutingDecision arxiv_only{Repo::Arxiv, std::nullopt, 0.9, ""};

  const auto partial = search_with_fallback(arxiv_only, {query("ok"), query("bad")}, 5, registry);
  CHECK(partial.records.size() == 1);
  CHECK(partial.errors.size() == 1);

  const auto empty = search_with_fallback(arxiv_only, {query("nothing")}, 5, registry);
  CHECK(empty.records.empty());
  CHECK_FALSE(empty.used_secondary);

  try {
    search_with_fallback(arxiv_only, {query("bad")}, 5, registry);
    FAIL("expected RepoUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RepoUnavailable);
  }
  // Primary down, secondary has no adapter: still a total failure.
  const RoutingDecision with_secondary{Repo::Arxiv, Repo::Medrxiv, 0.9, ""};
  CHECK_THROWS_AS(search_with_fallback(with_secondary, {query("bad")}, 5, registry), Error);
}

TEST_CASE("per-query limit applies before the union") {
  std::vector<PaperRecord> many;
  for (int i = 0; i < 10; ++i) many.push_back(record("Paper " + std::to_string(i)));
  RepositoryRegistry registry;
  registry.add(std::make_unique<CannedAdapter>(
      Repo::Arxiv, std::map<std::string, std::vector<PaperRecord>>{{"a", many}, {"b", many}}));
  const auto result =
      search_with_fallback({Repo::Arxiv, std::nullopt, 0.9, ""}, {query("a"), query("b")}, 4, registry);
  REQUIRE(result.records.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(result.records[i].title == "Paper " + std::to_string(i));
}

TEST_CASE("dedup matches a quadratic oracle on random input") {
  const std::vector<std::string> titles = {
      "Attention Is All You Need", "attention is all you need", "ATTENTION  is all you need.",
      "Deep Residual Learning",    "Deep residual learning!",   "\xEF\xBC\xA4" "eep Residual Learning",
      "Adam",                      "A.D.A.M.",                  "Graph Networks"};
  std::mt19937 rng(3);
  for (int round = 0; round < 500; ++round) {
    std::vector<PaperRecord> in;
    const int n = static_cast<int>(rng() % 25);
    for (int i = 0; i < n; ++i) {
      in.push_back(record(titles[rng() % titles.size()], "id" + std::to_string(i)));
    }
    const auto got = dedup(in);
    const auto want = dedup_oracle(in);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].native_id == want[i].native_id);
    const auto again = dedup(got);
    CHECK(again.size() == got.size());
  }
}

TEST_CASE("citation keys and arXiv BibTeX") {
  PaperRecord r = record("The Attention Is All You Need", "1706.03762v7");
  r.authors = {"Ashish Vaswani", "Noam Shazeer"};
  r.published = "2017-06-12";
  r.primary_category = "cs.CL";
  CHECK(citation_key(r) == "vaswani2017the");
  PaperRecord anon = record("", "1706.03762");
  CHECK(citation_key(anon) == "anonnd");
  PaperRecord comma = r;
  comma.authors = {"M\xC3\xBCller, Jan"};
  CHECK(citation_key(comma) == "muller2017the");

  const auto entry = arxiv_bibtex(r);
  CHECK(entry.source == BibSource::ArxivMetadata);
  const auto parsed = bibtex::parse_single(entry.raw);
  CHECK(parsed.key == "vaswani2017the");
  CHECK(parsed.type == "misc");
  CHECK(parsed.field("eprint") == "1706.03762");
  CHECK(parsed.field("author") == "Ashish Vaswani and Noam Shazeer");
  CHECK(parsed.field("url") == "https://arxiv.org/abs/1706.03762");
}

TEST_CASE("DOI content negotiation for bioRxiv and medRxiv") {
  Fixture f;
  CrossrefRxivBackend backend(f.net);
  const auto records = backend.search(Repo::Biorxiv, query("gut microbiome"), 5);
  REQUIRE_FALSE(records.empty());
  const auto entry = fetch_bibtex(records[0], f.net);
  CHECK(entry.source == BibSource::DoiNegotiation);
  CHECK(entry.key == citation_key(records[0]));
  const auto parsed = bibtex::parse_single(entry.raw);
  CHECK(parsed.key == entry.key);
  CHECK(parsed.field("doi").value_or("") == records[0].native_id);

  const auto* missing = f.upstream.find("10.1101/2023.02.14.528391");
  REQUIRE(missing != nullptr);
  PaperRecord r = record(missing->title, missing->id);
  r.repo = Repo::Biorxiv;
  try {
    fetch_bibtex(r, f.net);
    FAIL("expected BibUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BibUnavailable);
  }
  r.native_id = "not-a-doi";
  CHECK_THROWS_AS(fetch_bibtex(r, f.net), Error);
}
