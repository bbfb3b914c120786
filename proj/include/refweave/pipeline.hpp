#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "refweave/config.hpp"
#include "refweave/http.hpp"
#include "refweave/llm.hpp"
#include "refweave/manuscript.hpp"
#include "refweave/matching.hpp"
#include "refweave/repositories.hpp"
#include "refweave/retry.hpp"
#include "refweave/verification.hpp"

namespace refweave {

/// Test and tooling seams. Null members fall back to the configured
/// implementation.
struct EngineHooks {
  http::Transport* upstream = nullptr;  // replaces the live network
  llm::Provider* provider = nullptr;
  Sleeper* sleeper = nullptr;
  std::chrono::milliseconds arxiv_interval{3000};
};

/// Owns the outbound stack built from a Config:
/// guard -> recorder -> arXiv throttle -> {replay | capture | upstream}.
class Engine {
 public:
  explicit Engine(Config config, EngineHooks hooks = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const Config& config() const { return config_; }
  llm::Gateway& gateway() { return *gateway_; }
  http::GuardedTransport& guard() { return *guard_; }
  http::RequestLog& request_log() { return log_; }
  NetContext net() { return NetContext{*guard_, config_.retry, *sleeper_, *raw_}; }
  RepositoryRegistry& registry() { return registry_; }
  GrobidClient& grobid() { return *grobid_; }
  RawStore& raw_store() { return *raw_; }
  http::FixtureStore* fixture_store() { return store_.get(); }

 private:
  Config config_;
  std::unique_ptr<http::LiveTransport> live_;
  std::unique_ptr<http::FixtureStore> store_;
  std::unique_ptr<http::Transport> data_path_;
  std::unique_ptr<http::RouterTransport> router_;
  std::unique_ptr<http::ThrottledTransport> throttle_;
  http::RequestLog log_;
  std::unique_ptr<http::RecordingTransport> recorder_;
  std::unique_ptr<http::GuardedTransport> guard_;
  RealSleeper real_sleeper_;
  Sleeper* sleeper_ = nullptr;
  std::unique_ptr<RawStore> raw_;
  std::unique_ptr<llm::Provider> owned_provider_;
  std::unique_ptr<llm::Gateway> gateway_;
  std::unique_ptr<CrossrefRxivBackend> rxiv_backend_;
  RepositoryRegistry registry_;
  std::unique_ptr<GrobidClient> grobid_;
};

enum class JobState { Queued, Routing, Searching, Verifying, Matching, Done, Failed };
std::string_view to_string(JobState state);
JobState job_state_from_string(std::string_view name);
bool is_terminal(JobState state);

struct DiscoveryJob {
  std::string id;
  std::string manuscript_id;
  std::uint64_t manuscript_revision = 0;  // revision the selection refers to
  JobState state = JobState::Queued;
  Selection selection;
  std::optional<DiscoveryResult> result;
  std::optional<std::string> error;
  std::optional<JobState> failed_stage;
  std::map<std::string, double> timings_ms;
  std::string created_at;
};

void to_json(nlohmann::json& j, const DiscoveryJob& v);
void from_json(const nlohmann::json& j, DiscoveryJob& v);

using JobObserver = std::function<void(const DiscoveryJob&)>;

/// Runs segment -> route -> queries -> search -> verify -> match -> rank ->
/// explain, updating `job` and notifying at each transition. Per-candidate
/// failures degrade that candidate; stage failures end in FAILED.
void run_discovery(Engine& engine, const Manuscript& manuscript, DiscoveryJob& job,
                   const JobObserver& observer = {});

/// Convenience wrapper for one-shot use.
DiscoveryJob discover(Engine& engine, const Manuscript& manuscript, const Selection& selection);

std::string utc_timestamp();

}  // namespace refweave
