#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "refweave/matching.hpp"
#include "refweave/retry.hpp"
#include "refweave/verification.hpp"

namespace refweave {

enum class NetworkMode { Live, Replay, Record };

struct LlmConfig {
  std::string provider = "mock";  // mock | openai
  std::string endpoint;
  std::string model;
  std::string api_key;
  std::filesystem::path mock_fixtures;
  std::string mock_fallback = "heuristic";  // none | static | heuristic
  std::filesystem::path mock_static_dir;
  int max_in_flight = 4;
};

struct Config {
  LlmConfig llm;
  std::string grobid_url;
  double grobid_timeout_s = 120.0;
  RetryPolicy retry;
  int candidate_limit = 5;
  NetworkMode network_mode = NetworkMode::Live;
  std::filesystem::path fixture_store;
  bool allow_doi_redirects = false;
  std::filesystem::path data_dir;
  int verification_workers = 3;
  std::size_t pdf_cap_bytes = kDefaultPdfCapBytes;
  MatchOptions matching;
  std::string listen_host = "127.0.0.1";
  int listen_port = 8750;
};

inline constexpr const char* kConfigEnvVar = "REFWEAVE_CONFIG";
inline constexpr const char* kDefaultConfigFile = "refweave.json";

/// Relative paths resolve against `base_dir`. Throws ConfigError.
Config parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& file);

/// --config wins, then REFWEAVE_CONFIG, then ./refweave.json.
std::filesystem::path resolve_config_path(const std::optional<std::string>& cli_value);

NetworkMode network_mode_from_string(std::string_view name);
std::string_view to_string(NetworkMode mode);

/// Hosts every outbound request may target: repositories, DOI resolver,
/// GROBID and (for a remote provider) the LLM endpoint.
std::set<std::string> allowlisted_hosts(const Config& config);

/// Host of the configured LLM endpoint, empty for the mock provider.
std::string llm_host(const Config& config);

}  // namespace refweave
