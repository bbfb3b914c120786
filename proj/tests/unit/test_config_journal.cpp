#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include "refweave/config.hpp"
#include "refweave/error.hpp"
#include "refweave/journal.hpp"
#include "refweave/serialize.hpp"
#include "test_env.hpp"

using namespace refweave;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json{{"llm", {{"provider", "mock"}}},
              {"grobid", {{"base_url", "http://localhost:8070"}}},
              {"data_dir", "var"}};
}

Errc config_error(const json& doc) {
  try {
    parse_config(doc, "/base");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected ConfigError for " << doc.dump());
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto c = parse_config(minimal(), "/base");
  CHECK(c.llm.provider == "mock");
  CHECK(c.llm.mock_fallback == "heuristic");
  CHECK(c.llm.max_in_flight == 4);
  CHECK(c.candidate_limit == 5);
  CHECK(c.network_mode == NetworkMode::Live);
  CHECK(c.data_dir == fs::path("/base/var"));
  CHECK(c.retry.max_attempts == RetryPolicy{}.max_attempts);
  CHECK(c.pdf_cap_bytes == kDefaultPdfCapBytes);
  CHECK(c.matching.aggregation == Aggregation::Max);
  CHECK(c.matching.shortlist_k == 12);
  CHECK(llm_host(c).empty());
  CHECK(allowlisted_hosts(c).count("localhost") == 1);
  CHECK(allowlisted_hosts(c).count("export.arxiv.org") == 1);
}

TEST_CASE("full config is read") {
  auto doc = minimal();
  doc["llm"] = {{"provider", "openai"},
                {"endpoint", "https://llm.example.net/v1/chat/completions"},
                {"model", "m"},
                {"api_key", "k"},
                {"max_in_flight", 2}};
  doc["retry"] = {{"base_delay_ms", 100}, {"factor", 3.0}, {"max_attempts", 2}, {"jitter", 0.0}};
  doc["network"] = {{"mode", "record"}, {"fixture_store", "store"}, {"allow_doi_redirects", true}};
  doc["candidate_limit"] = 7;
  doc["pdf_cap_mb"] = 1;
  doc["matching"] = {{"aggregation", "mean_top3"}, {"shortlist_k", 4}};
  doc["listen"] = {{"host", "0.0.0.0"}, {"port", 9000}};
  const auto c = parse_config(doc, "/base");
  CHECK(c.llm.endpoint == "https://llm.example.net/v1/chat/completions");
  CHECK(llm_host(c) == "llm.example.net");
  CHECK(allowlisted_hosts(c).count("llm.example.net") == 1);
  CHECK(c.retry.base_delay_ms == 100);
  CHECK(c.retry.factor == 3.0);
  CHECK(c.network_mode == NetworkMode::Record);
  CHECK(c.fixture_store == fs::path("/base/store"));
  CHECK(c.allow_doi_redirects);
  CHECK(c.candidate_limit == 7);
  CHECK(c.pdf_cap_bytes == 1024 * 1024);
  CHECK(c.matching.aggregation == Aggregation::MeanTop3);
  CHECK(c.matching.shortlist_k == 4);
  CHECK(c.listen_port == 9000);
}

TEST_CASE("invalid configs are rejected") {
  auto no_llm = minimal();
  no_llm.erase("llm");
  CHECK(config_error(no_llm) == Errc::ConfigError);
  auto bad_provider = minimal();
  bad_provider["llm"]["provider"] = "other";
  CHECK(config_error(bad_provider) == Errc::ConfigError);
  auto openai_no_model = minimal();
  openai_no_model["llm"] = {{"provider", "openai"}, {"endpoint", "https://x.example/v1"}};
  CHECK(config_error(openai_no_model) == Errc::ConfigError);
  auto no_grobid = minimal();
  no_grobid.erase("grobid");
  CHECK(config_error(no_grobid) == Errc::ConfigError);
  auto bad_url = minimal();
  bad_url["grobid"]["base_url"] = "not a url";
  CHECK(config_error(bad_url) == Errc::ConfigError);
  auto bad_retry = minimal();
  bad_retry["retry"] = {{"factor", 0.5}};
  CHECK(config_error(bad_retry) == Errc::ConfigError);
  auto bad_type = minimal();
  bad_type["candidate_limit"] = "five";
  CHECK(config_error(bad_type) == Errc::ConfigError);
  auto bad_limit = minimal();
  bad_limit["candidate_limit"] = 0;
  CHECK(config_error(bad_limit) == Errc::ConfigError);
  auto replay_no_store = minimal();
  replay_no_store["network"] = {{"mode", "replay"}};
  CHECK(config_error(replay_no_store) == Errc::ConfigError);
  auto bad_mode = minimal();
  bad_mode["network"] = {{"mode", "offline"}};
  CHECK(config_error(bad_mode) == Errc::ConfigError);
  auto no_data = minimal();
  no_data.erase("data_dir");
  CHECK(config_error(no_data) == Errc::ConfigError);
  auto bad_agg = minimal();
  bad_agg["matching"] = {{"aggregation", "median"}};
  CHECK(config_error(bad_agg) == Errc::ConfigError);
  CHECK(config_error(json::array()) == Errc::ConfigError);
}

TEST_CASE("config files and path resolution") {
  testing::TempDir dir;
  const auto file = dir.path() / "c.json";
  std::ofstream(file) << minimal().dump();
  CHECK(load_config(file).data_dir == dir.path() / "var");
  std::ofstream(dir.path() / "broken.json") << "{";
  CHECK_THROWS_AS(load_config(dir.path() / "broken.json"), Error);
  CHECK_THROWS_AS(load_config(dir.path() / "missing.json"), Error);

  const auto shipped = load_config(testing::source_dir() / "config" / "offline.json");
  CHECK(shipped.network_mode == NetworkMode::Replay);
  CHECK(fs::exists(shipped.fixture_store));

  ::unsetenv(kConfigEnvVar);
  CHECK(resolve_config_path(std::nullopt) == fs::path(kDefaultConfigFile));
  ::setenv(kConfigEnvVar, "/env/config.json", 1);
  CHECK(resolve_config_path(std::nullopt) == fs::path("/env/config.json"));
  CHECK(resolve_config_path(std::string("/cli.json")) == fs::path("/cli.json"));
  ::unsetenv(kConfigEnvVar);
  CHECK(network_mode_from_string(to_string(NetworkMode::Replay)) == NetworkMode::Replay);
}

TEST_CASE("journal keeps the latest record per key") {
  testing::TempDir dir;
  const auto file = dir.path() / "sub" / "journal.jsonl";
  {
    Journal j(file, 0);
    j.append("job", "a", {{"v", 1}});
    j.append("job", "b", {{"v", 2}});
    j.append("job", "a", {{"v", 3}});
    j.append("chat", "a", {{"v", 4}});
    const auto snap = j.load();
    CHECK(snap.at("job").at("a").at("v") == 3);
    CHECK(snap.at("job").at("b").at("v") == 2);
    CHECK(snap.at("chat").at("a").at("v") == 4);
  }
  std::ofstream(file, std::ios::app) << "{\"kind\":\"job\",\"id\":\"c\",\"da";
  Journal reopened(file, 0);
  const auto snap = reopened.load();
  CHECK(snap.at("job").size() == 2);
  CHECK(snap.at("job").count("c") == 0);
}

TEST_CASE("journal compaction") {
  testing::TempDir dir;
  const auto file = dir.path() / "journal.jsonl";
  Journal j(file, 10);
  for (int i = 0; i < 25; ++i) j.append("job", "k" + std::to_string(i % 3), {{"i", i}});
  const auto lines = [&] {
    std::ifstream in(file);
    std::string l;
    int n = 0;
    while (std::getline(in, l)) ++n;
    return n;
  };
  CHECK(lines() == 3 + 5);
  const auto snap = j.load();
  CHECK(snap.at("job").at("k0").at("i") == 24);
  CHECK(snap.at("job").at("k1").at("i") == 22);
  CHECK(snap.at("job").at("k2").at("i") == 23);
  j.compact();
  CHECK(lines() == 3);
  CHECK(j.load() == snap);
}

TEST_CASE("journal appends from many threads") {
  testing::TempDir dir;
  Journal j(dir.path() / "journal.jsonl", 16);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) j.append("t" + std::to_string(t), std::to_string(i), {{"i", i}});
    });
  }
  for (auto& th : threads) th.join();
  const auto snap = j.load();
  REQUIRE(snap.size() == 4);
  for (const auto& [kind, records] : snap) CHECK(records.size() == 50);
}

TEST_CASE("results round-trip through JSON") {
  DiscoveryResult r;
  r.claim = {"Claim text.", 2};
  r.trace.claims = {r.claim};
  r.trace.routing = {Repo::Biorxiv, std::nullopt, 0.7, "biology"};
  SearchQuery q;
  q.query_string = "gene cohort";
  r.trace.queries = {q};
  CandidateReference c;
  c.record.repo = Repo::Biorxiv;
  c.record.native_id = "10.1101/x";
  c.record.title = "T";
  c.record.authors = {"A One", "B Two"};
  c.verifiable = true;
  c.matches = {{4, 0.9, "reason", "Paragraph."}};
  c.overall_relevance = 0.9;
  r.candidates = {c};
  r.top = 0;

  const json j = r;
  const auto back = j.get<DiscoveryResult>();
  CHECK(json(back) == j);
  CHECK(result_digest(back) == result_digest(r));
  auto changed = r;
  changed.candidates[0].overall_relevance = 0.8;
  CHECK(result_digest(changed) != result_digest(r));
  auto later = r;
  later.created_at = "2030-01-01T00:00:00Z";
  CHECK(result_digest(later) == result_digest(r));

  ChatContext ctx;
  ctx.paper_summary = "S";
  ctx.reference = c;
  ctx.metadata = {r.trace, r.claim};
  ctx.turns = {{Role::User, "q"}, {Role::Assistant, "a"}};
  const json cj = ctx;
  CHECK(json(cj.get<ChatContext>()) == cj);
}
