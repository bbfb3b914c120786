#include "refweave/service.hpp"

#include <spdlog/spdlog.h>

#include "refweave/error.hpp"
#include "refweave/serialize.hpp"
#include "refweave/text.hpp"

namespace refweave {

using nlohmann::json;

Service::Service(Engine& engine)
    : engine_(engine),
      journal_(engine.config().data_dir / "journal.jsonl"),
      chats_([this](const std::string& id, const ChatContext& ctx) {
        journal_.append("chat", id, json(ctx));
      }) {
  restore();
  worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void Service::restore() {
  const auto snapshot = journal_.load();
  std::size_t interrupted = 0;
  if (auto it = snapshot.find("manuscript"); it != snapshot.end()) {
    for (const auto& [id, data] : it->second) manuscripts_[id] = data.get<Manuscript>();
  }
  if (auto it = snapshot.find("job"); it != snapshot.end()) {
    for (const auto& [id, data] : it->second) {
      auto job = data.get<DiscoveryJob>();
      if (!is_terminal(job.state)) {
        job.failed_stage = job.state;
        job.error = std::string(to_string(job.state)) + ": interrupted by restart";
        job.state = JobState::Failed;
        journal_.append("job", id, json(job));
        ++interrupted;
      }
      jobs_[id] = std::move(job);
      versions_[id] = 1;
    }
  }
  if (auto it = snapshot.find("chat"); it != snapshot.end()) {
    for (const auto& [id, data] : it->second) chats_.restore(id, data.get<ChatContext>());
  }
  if (!snapshot.empty()) {
    spdlog::info("restored {} manuscripts, {} jobs ({} interrupted)", manuscripts_.size(),
                 jobs_.size(), interrupted);
  }
}

std::string Service::add_manuscript(Manuscript manuscript) {
  const auto id = new_id("ms-");
  journal_.append("manuscript", id, json(manuscript));
  std::lock_guard lock(mutex_);
  manuscripts_[id] = std::move(manuscript);
  return id;
}

std::optional<Manuscript> Service::manuscript(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = manuscripts_.find(id);
  if (it == manuscripts_.end()) return std::nullopt;
  return it->second;
}

void Service::store_job(const DiscoveryJob& job) {
  journal_.append("job", job.id, json(job));
  {
    std::lock_guard lock(mutex_);
    jobs_[job.id] = job;
    ++versions_[job.id];
  }
  changed_.notify_all();
}

std::string Service::submit(const std::string& manuscript_id, std::size_t start_offset,
                            std::size_t end_offset) {
  auto ms = manuscript(manuscript_id);
  if (!ms) throw Error(Errc::NotFound, "no manuscript " + manuscript_id);
  DiscoveryJob job;
  job.id = new_id("job-");
  job.manuscript_id = manuscript_id;
  job.manuscript_revision = ms->revision;
  job.selection = make_selection(*ms, start_offset, end_offset);
  if (text::trim(job.selection.text).empty()) throw Error(Errc::EmptySelection, "selection is blank");
  job.created_at = utc_timestamp();
  store_job(job);
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(job.id);
  }
  changed_.notify_all();
  return job.id;
}

std::optional<DiscoveryJob> Service::job(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Service::wait_for_change(const std::string& id, std::uint64_t seen,
                                       std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto version = [&] {
    auto it = versions_.find(id);
    return it == versions_.end() ? std::uint64_t{0} : it->second;
  };
  changed_.wait_for(lock, timeout, [&] { return stopping_ || version() > seen; });
  return version();
}

void Service::wait_idle() const {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [&] { return stopping_ || (queue_.empty() && !running_job_); });
}

void Service::worker_loop() {
  for (;;) {
    DiscoveryJob job;
    Manuscript ms;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      const auto id = queue_.front();
      queue_.pop_front();
      job = jobs_.at(id);
      ms = manuscripts_.at(job.manuscript_id);
      running_job_ = true;
    }
    try {
      run_discovery(engine_, ms, job, [this](const DiscoveryJob& j) { store_job(j); });
    } catch (const std::exception& e) {
      job.failed_stage = job.state;
      job.error = std::string(to_string(job.state)) + ": " + e.what();
      job.state = JobState::Failed;
      store_job(job);
    }
    {
      std::lock_guard lock(mutex_);
      running_job_ = false;
    }
    changed_.notify_all();
  }
}

InsertOutcome Service::insert(const std::string& job_id, std::size_t candidate_index,
                              std::optional<std::uint64_t> expected_revision) {
  std::lock_guard lock(mutex_);
  auto jit = jobs_.find(job_id);
  if (jit == jobs_.end()) throw Error(Errc::NotFound, "no job " + job_id);
  auto& job = jit->second;
  if (job.state != JobState::Done || !job.result) {
    throw Error(Errc::Conflict, "job " + job_id + " is " + std::string(to_string(job.state)));
  }
  if (candidate_index >= job.result->candidates.size()) {
    throw Error(Errc::NoSuchCandidate, "candidate " + std::to_string(candidate_index));
  }
  auto& ms = manuscripts_.at(job.manuscript_id);
  if (expected_revision && *expected_revision != ms.revision) {
    throw Error(Errc::Conflict, "manuscript is at revision " + std::to_string(ms.revision));
  }
  if (ms.revision != job.manuscript_revision) {
    throw Error(Errc::Conflict, "manuscript changed since the job was submitted");
  }
  const auto& bib = job.result->candidates[candidate_index].bibtex;
  const auto before = text::codepoint_length(ms.tex_source);
  auto inserted = insert_citation(ms, job.selection, bib.key, bib.raw);
  const auto grown = text::codepoint_length(inserted.manuscript.tex_source) - before;

  // The selection now spans the inserted command, so a further insert lands
  // after it.
  ms = std::move(inserted.manuscript);
  job.selection = make_selection(ms, job.selection.start_offset, job.selection.end_offset + grown);
  job.manuscript_revision = ms.revision;
  journal_.append("manuscript", job.manuscript_id, json(ms));
  journal_.append("job", job.id, json(job));
  ++versions_[job.id];
  changed_.notify_all();

  InsertOutcome out;
  out.manuscript_id = job.manuscript_id;
  out.revision = ms.revision;
  out.cite_key = inserted.cite_key;
  out.bib_appended = inserted.bib_appended;
  out.tex_source = ms.tex_source;
  out.bib_source = ms.bib_source;
  out.bib_path = ms.bib_path;
  return out;
}

std::string Service::open_chat(const std::string& job_id, std::size_t candidate_index) {
  DiscoveryJob j;
  std::string summary;
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(Errc::NotFound, "no job " + job_id);
    j = it->second;
    summary = manuscripts_.at(j.manuscript_id).schema.summary;
  }
  if (!j.result) throw Error(Errc::Conflict, "job " + job_id + " has no result");
  return chats_.open(open_session(*j.result, candidate_index, summary));
}

std::string Service::chat_send(const std::string& session_id, std::string_view text) {
  return chats_.send(session_id, text, engine_.gateway());
}

std::optional<ChatContext> Service::chat(const std::string& session_id) const {
  return chats_.get(session_id);
}

Health Service::health() {
  Health h;
  h.grobid_ok = engine_.grobid().alive();
  h.llm_ok = engine_.gateway().healthy();
  h.ok = true;
  return h;
}

}  // namespace refweave
