#include "refweave/pipeline.hpp"

#include <atomic>
#include <ctime>
#include <thread>

#include <spdlog/spdlog.h>

#include "refweave/error.hpp"
#include "refweave/query.hpp"
#include "refweave/routing.hpp"
#include "refweave/serialize.hpp"
#include "refweave/text.hpp"

namespace refweave {

namespace fs = std::filesystem;
using nlohmann::json;

Engine::Engine(Config config, EngineHooks hooks) : config_(std::move(config)) {
  http::Transport* upstream = hooks.upstream;
  if (!upstream) {
    live_ = std::make_unique<http::LiveTransport>();
    upstream = live_.get();
  }
  http::Transport* data_path = upstream;
  if (config_.network_mode != NetworkMode::Live) {
    store_ = std::make_unique<http::FixtureStore>(config_.fixture_store);
    if (config_.network_mode == NetworkMode::Replay) {
      data_path_ = std::make_unique<http::ReplayTransport>(*store_);
    } else {
      data_path_ = std::make_unique<http::CaptureTransport>(*upstream, *store_);
    }
    data_path = data_path_.get();
  }
  // LLM traffic is never recorded into or replayed from the fixture store.
  router_ = std::make_unique<http::RouterTransport>(*data_path);
  if (const auto host = llm_host(config_); !host.empty()) router_->route(host, *upstream);

  const auto interval =
      config_.network_mode == NetworkMode::Replay ? std::chrono::milliseconds(0) : hooks.arxiv_interval;
  throttle_ = std::make_unique<http::ThrottledTransport>(*router_, "export.arxiv.org", interval);
  recorder_ = std::make_unique<http::RecordingTransport>(*throttle_, log_);

  http::EgressPolicy policy;
  policy.hosts = allowlisted_hosts(config_);
  policy.allow_doi_redirects = config_.allow_doi_redirects;
  if (store_ && config_.network_mode == NetworkMode::Replay) policy.redirect_hosts = store_->hosts();
  guard_ = std::make_unique<http::GuardedTransport>(*recorder_, std::move(policy));

  sleeper_ = hooks.sleeper ? hooks.sleeper : &real_sleeper_;
  raw_ = std::make_unique<RawStore>(config_.data_dir / "raw");

  llm::Provider* provider = hooks.provider;
  if (!provider) {
    if (config_.llm.provider == "openai") {
      owned_provider_ = std::make_unique<llm::ChatCompletionProvider>(
          *guard_, config_.llm.endpoint, config_.llm.model, config_.llm.api_key);
    } else {
      llm::MockOptions options;
      options.fixtures_dir = config_.llm.mock_fixtures;
      options.static_dir = config_.llm.mock_static_dir;
      options.fallback = config_.llm.mock_fallback == "none"     ? llm::MockOptions::Fallback::None
                         : config_.llm.mock_fallback == "static" ? llm::MockOptions::Fallback::StaticDirectory
                                                                 : llm::MockOptions::Fallback::Heuristic;
      owned_provider_ = std::make_unique<llm::MockProvider>(std::move(options));
    }
    provider = owned_provider_.get();
  }
  gateway_ = std::make_unique<llm::Gateway>(*provider, config_.llm.max_in_flight);

  registry_.add(std::make_unique<ArxivAdapter>(net()));
  rxiv_backend_ = std::make_unique<CrossrefRxivBackend>(net());
  registry_.add(std::make_unique<RxivAdapter>(Repo::Biorxiv, *rxiv_backend_));
  registry_.add(std::make_unique<RxivAdapter>(Repo::Medrxiv, *rxiv_backend_));
  grobid_ = std::make_unique<GrobidClient>(
      net(), config_.grobid_url,
      std::chrono::seconds(static_cast<long>(std::max(1.0, config_.grobid_timeout_s))));
}

Engine::~Engine() = default;

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::Queued: return "QUEUED";
    case JobState::Routing: return "ROUTING";
    case JobState::Searching: return "SEARCHING";
    case JobState::Verifying: return "VERIFYING";
    case JobState::Matching: return "MATCHING";
    case JobState::Done: return "DONE";
    case JobState::Failed: return "FAILED";
  }
  return "FAILED";
}

JobState job_state_from_string(std::string_view name) {
  for (auto s : {JobState::Queued, JobState::Routing, JobState::Searching, JobState::Verifying,
                 JobState::Matching, JobState::Done, JobState::Failed}) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::InvalidArgument, "unknown job state " + std::string(name));
}

bool is_terminal(JobState state) { return state == JobState::Done || state == JobState::Failed; }

void to_json(json& j, const DiscoveryJob& v) {
  j = {{"id", v.id},
       {"manuscript_id", v.manuscript_id},
       {"manuscript_revision", v.manuscript_revision},
       {"state", to_string(v.state)},
       {"selection", v.selection},
       {"result", v.result ? json(*v.result) : json(nullptr)},
       {"error", v.error ? json(*v.error) : json(nullptr)},
       {"failed_stage", v.failed_stage ? json(to_string(*v.failed_stage)) : json(nullptr)},
       {"timings_ms", v.timings_ms},
       {"created_at", v.created_at}};
}

void from_json(const json& j, DiscoveryJob& v) {
  j.at("id").get_to(v.id);
  j.at("manuscript_id").get_to(v.manuscript_id);
  j.at("manuscript_revision").get_to(v.manuscript_revision);
  v.state = job_state_from_string(j.at("state").get<std::string>());
  j.at("selection").get_to(v.selection);
  v.result.reset();
  if (!j.at("result").is_null()) v.result = j.at("result").get<DiscoveryResult>();
  v.error.reset();
  if (j.at("error").is_string()) v.error = j.at("error").get<std::string>();
  v.failed_stage.reset();
  if (j.at("failed_stage").is_string()) {
    v.failed_stage = job_state_from_string(j.at("failed_stage").get<std::string>());
  }
  j.at("timings_ms").get_to(v.timings_ms);
  j.at("created_at").get_to(v.created_at);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < count; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
}

struct Verified {
  bool keep = false;  // false when no BibTeX could be produced
  CandidateReference candidate;
  std::optional<ParsedDocument> document;
  std::string note;
};

Verified verify_candidate(Engine& engine, const PaperRecord& record) {
  Verified v;
  v.candidate.record = record;
  auto net = engine.net();
  try {
    v.candidate.bibtex = fetch_bibtex(record, net);
  } catch (const Error& e) {
    v.note = "dropped " + record.native_id + ": " + e.what();
    return v;
  }
  v.keep = true;
  try {
    const auto pdf = acquire_pdf(record, net, engine.config().pdf_cap_bytes);
    auto doc = engine.grobid().parse_fulltext(pdf, record.native_id);
    const auto tei = engine.raw_store().get(doc.tei_digest);
    if (!tei || !verify_parsed_document(doc, *tei)) {
      v.candidate.status_note = "parsed text failed the integrity check";
      return v;
    }
    v.document = std::move(doc);
  } catch (const Error& e) {
    v.candidate.status_note = e.what();
  }
  return v;
}

}  // namespace

void run_discovery(Engine& engine, const Manuscript& manuscript, DiscoveryJob& job,
                   const JobObserver& observer) {
  using clock = std::chrono::steady_clock;
  auto stage_start = clock::now();
  auto enter = [&](JobState next) {
    const auto now = clock::now();
    if (job.state != JobState::Queued) {
      job.timings_ms[std::string(to_string(job.state))] =
          std::chrono::duration<double, std::milli>(now - stage_start).count();
    }
    stage_start = now;
    job.state = next;
    if (observer) observer(job);
  };
  auto fail = [&](const std::string& message) {
    job.failed_stage = job.state;
    job.error = std::string(to_string(job.state)) + ": " + message;
    spdlog::warn("job {} failed: {}", job.id, *job.error);
    enter(JobState::Failed);
  };

  const auto& config = engine.config();
  auto& gateway = engine.gateway();
  DiscoveryResult result;
  PipelineTrace& trace = result.trace;
  std::vector<PaperRecord> records;

  enter(JobState::Routing);
  try {
    trace.claims = segment_sentences(job.selection);
    trace.routing = route(trace.claims, manuscript.schema, gateway);
  } catch (const Error& e) {
    return fail(e.what());
  }

  enter(JobState::Searching);
  try {
    trace.queries = build_queries(trace.claims, manuscript.schema, job.selection.surrounding_paragraph,
                                  QueryVariant::ContextAware, gateway);
    auto found = search_with_fallback(trace.routing, trace.queries, config.candidate_limit,
                                      engine.registry());
    trace.used_secondary = found.used_secondary;
    for (auto& e : found.errors) trace.notes.push_back(std::move(e));
    records = std::move(found.records);
  } catch (const Error& e) {
    return fail(e.what());
  }

  enter(JobState::Verifying);
  std::vector<Verified> verified(records.size());
  parallel_for(records.size(), config.verification_workers,
               [&](std::size_t i) { verified[i] = verify_candidate(engine, records[i]); });

  enter(JobState::Matching);
  result.claim = Claim{text::collapse_whitespace(job.selection.text), 0};
  parallel_for(verified.size(), config.llm.max_in_flight, [&](std::size_t i) {
    auto& v = verified[i];
    if (!v.keep || !v.document) return;
    try {
      auto score = score_candidate(result.claim, job.selection.surrounding_paragraph, *v.document,
                                   gateway, config.matching);
      v.candidate.overall_relevance = score.overall;
      v.candidate.matches = std::move(score.matches);
      v.candidate.verifiable = true;
    } catch (const Error& e) {
      v.candidate.status_note = std::string("matching failed: ") + e.what();
    }
  });

  std::vector<CandidateReference> candidates;
  std::map<std::string, std::size_t> paragraph_counts;
  for (auto& v : verified) {
    if (!v.keep) {
      trace.notes.push_back(v.note);
      continue;
    }
    if (v.document) paragraph_counts[v.candidate.record.native_id] = v.document->paragraph_index.size();
    candidates.push_back(std::move(v.candidate));
  }
  auto ranked = rank(result.claim, std::move(candidates));
  ranked.trace = std::move(result.trace);
  if (ranked.top && ranked.candidates[*ranked.top].verifiable) {
    auto& top = ranked.candidates[*ranked.top];
    top.explanation = explain_top(ranked.claim, top, paragraph_counts[top.record.native_id], gateway,
                                  manuscript.schema.summary);
  }
  ranked.created_at = utc_timestamp();
  job.result = std::move(ranked);
  enter(JobState::Done);
}

DiscoveryJob discover(Engine& engine, const Manuscript& manuscript, const Selection& selection) {
  DiscoveryJob job;
  job.id = "oneshot";
  job.selection = selection;
  job.manuscript_revision = manuscript.revision;
  job.created_at = utc_timestamp();
  run_discovery(engine, manuscript, job);
  return job;
}

}  // namespace refweave
