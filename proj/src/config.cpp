#include "refweave/config.hpp"

#include <cstdlib>
#include <fstream>

#include "refweave/error.hpp"
#include "refweave/http.hpp"

namespace refweave {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Errc::ConfigError, message); }

const json* section(const json& doc, const char* name) {
  if (!doc.contains(name)) return nullptr;
  const auto& s = doc.at(name);
  if (!s.is_object()) fail(std::string(name) + " must be an object");
  return &s;
}

template <typename T>
T read(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("bad type for ") + key);
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace

NetworkMode network_mode_from_string(std::string_view name) {
  if (name == "live") return NetworkMode::Live;
  if (name == "replay") return NetworkMode::Replay;
  if (name == "record") return NetworkMode::Record;
  fail("unknown network mode: " + std::string(name));
}

std::string_view to_string(NetworkMode mode) {
  switch (mode) {
    case NetworkMode::Live: return "live";
    case NetworkMode::Replay: return "replay";
    case NetworkMode::Record: return "record";
  }
  return "live";
}

Config parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) fail("config must be an object");
  Config c;

  const auto* llm = section(doc, "llm");
  if (!llm || !llm->contains("provider")) fail("missing llm.provider");
  c.llm.provider = read<std::string>(*llm, "provider", "");
  if (c.llm.provider != "mock" && c.llm.provider != "openai") fail("llm.provider must be mock or openai");
  c.llm.endpoint = read<std::string>(*llm, "endpoint", "");
  c.llm.model = read<std::string>(*llm, "model", "");
  c.llm.api_key = read<std::string>(*llm, "api_key", "");
  c.llm.mock_fixtures = resolve(base_dir, read<std::string>(*llm, "mock_fixtures", ""));
  c.llm.mock_fallback = read<std::string>(*llm, "mock_fallback", "heuristic");
  c.llm.mock_static_dir = resolve(base_dir, read<std::string>(*llm, "mock_static_dir", ""));
  c.llm.max_in_flight = read<int>(*llm, "max_in_flight", 4);
  if (c.llm.provider == "openai" && (c.llm.endpoint.empty() || c.llm.model.empty())) {
    fail("llm.endpoint and llm.model are required for the openai provider");
  }
  if (c.llm.mock_fallback != "none" && c.llm.mock_fallback != "static" &&
      c.llm.mock_fallback != "heuristic") {
    fail("llm.mock_fallback must be none, static or heuristic");
  }
  if (c.llm.max_in_flight < 1 || c.llm.max_in_flight > 64) fail("llm.max_in_flight out of range");

  const auto* grobid = section(doc, "grobid");
  if (!grobid || !grobid->contains("base_url")) fail("missing grobid.base_url");
  c.grobid_url = read<std::string>(*grobid, "base_url", "");
  c.grobid_timeout_s = read<double>(*grobid, "timeout_s", 120.0);
  try {
    http::Url::parse(c.grobid_url);
    if (c.llm.provider == "openai") http::Url::parse(c.llm.endpoint);
  } catch (const Error& e) {
    fail(e.what());
  }

  if (const auto* retry = section(doc, "retry")) {
    c.retry.base_delay_ms = read<int>(*retry, "base_delay_ms", c.retry.base_delay_ms);
    c.retry.factor = read<double>(*retry, "factor", c.retry.factor);
    c.retry.max_attempts = read<int>(*retry, "max_attempts", c.retry.max_attempts);
    c.retry.jitter_fraction = read<double>(*retry, "jitter", c.retry.jitter_fraction);
  }
  try {
    c.retry.validate();
  } catch (const Error& e) {
    fail(e.what());
  }

  c.candidate_limit = read<int>(doc, "candidate_limit", 5);
  if (c.candidate_limit < 1 || c.candidate_limit > 50) fail("candidate_limit must be 1..50");

  if (const auto* net = section(doc, "network")) {
    c.network_mode = network_mode_from_string(read<std::string>(*net, "mode", "live"));
    c.fixture_store = resolve(base_dir, read<std::string>(*net, "fixture_store", ""));
    c.allow_doi_redirects = read<bool>(*net, "allow_doi_redirects", false);
  }
  if (c.network_mode != NetworkMode::Live && c.fixture_store.empty()) {
    fail("network.fixture_store is required in replay and record modes");
  }

  if (!doc.contains("data_dir")) fail("missing data_dir");
  c.data_dir = resolve(base_dir, read<std::string>(doc, "data_dir", ""));
  if (c.data_dir.empty()) fail("data_dir is empty");

  c.verification_workers = read<int>(doc, "verification_workers", 3);
  if (c.verification_workers < 1) fail("verification_workers must be positive");
  const auto cap_mb = read<double>(doc, "pdf_cap_mb", 30.0);
  if (cap_mb <= 0) fail("pdf_cap_mb must be positive");
  c.pdf_cap_bytes = static_cast<std::size_t>(cap_mb * 1024 * 1024);

  if (const auto* m = section(doc, "matching")) {
    const auto agg = read<std::string>(*m, "aggregation", "max");
    if (agg == "max") {
      c.matching.aggregation = Aggregation::Max;
    } else if (agg == "mean_top3") {
      c.matching.aggregation = Aggregation::MeanTop3;
    } else {
      fail("matching.aggregation must be max or mean_top3");
    }
    c.matching.shortlist_k = read<std::size_t>(*m, "shortlist_k", 12);
    if (c.matching.shortlist_k < 1) fail("matching.shortlist_k must be positive");
  }

  if (const auto* listen = section(doc, "listen")) {
    c.listen_host = read<std::string>(*listen, "host", c.listen_host);
    c.listen_port = read<int>(*listen, "port", c.listen_port);
  }
  return c;
}

Config load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail("cannot read config " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config " + file.string() + ": " + e.what());
  }
  return parse_config(doc, fs::absolute(file).parent_path());
}

fs::path resolve_config_path(const std::optional<std::string>& cli_value) {
  if (cli_value && !cli_value->empty()) return *cli_value;
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return env;
  return kDefaultConfigFile;
}

std::string llm_host(const Config& config) {
  return config.llm.provider == "openai" ? http::host_of(config.llm.endpoint) : std::string();
}

std::set<std::string> allowlisted_hosts(const Config& config) {
  std::set<std::string> hosts = {"export.arxiv.org", "arxiv.org",      "api.crossref.org",
                                 "doi.org",          "www.biorxiv.org", "www.medrxiv.org"};
  hosts.insert(http::host_of(config.grobid_url));
  if (auto h = llm_host(config); !h.empty()) hosts.insert(h);
  return hosts;
}

}  // namespace refweave
