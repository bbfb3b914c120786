#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "refweave/chat.hpp"
#include "refweave/journal.hpp"
#include "refweave/manuscript.hpp"
#include "refweave/pipeline.hpp"

namespace refweave {

struct InsertOutcome {
  std::string manuscript_id;
  std::uint64_t revision = 0;
  std::string cite_key;
  bool bib_appended = false;
  std::string tex_source;
  std::string bib_source;
  std::string bib_path;
};

struct Health {
  bool ok = true;
  bool grobid_ok = false;
  bool llm_ok = false;
};

/// Manuscripts, discovery jobs and chat sessions, persisted to a journal in
/// the data directory. Jobs run one at a time on a worker thread.
class Service {
 public:
  explicit Service(Engine& engine);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  std::string add_manuscript(Manuscript manuscript);
  std::optional<Manuscript> manuscript(const std::string& id) const;

  /// Validates the span and queues a job. Throws NotFound, InvalidSelection.
  std::string submit(const std::string& manuscript_id, std::size_t start_offset,
                     std::size_t end_offset);
  std::optional<DiscoveryJob> job(const std::string& id) const;
  /// Blocks until the job's version exceeds `seen` or the timeout passes.
  /// Returns the current version.
  std::uint64_t wait_for_change(const std::string& id, std::uint64_t seen,
                                std::chrono::milliseconds timeout) const;
  /// Blocks until no job is queued or running.
  void wait_idle() const;

  /// Inserts the candidate's citation at the job's selection. When
  /// `expected_revision` is given it must match the manuscript (else
  /// Conflict). Throws NotFound, NoSuchCandidate, Conflict.
  InsertOutcome insert(const std::string& job_id, std::size_t candidate_index,
                       std::optional<std::uint64_t> expected_revision = std::nullopt);

  std::string open_chat(const std::string& job_id, std::size_t candidate_index);
  std::string chat_send(const std::string& session_id, std::string_view text);
  std::optional<ChatContext> chat(const std::string& session_id) const;

  Health health();
  Engine& engine() { return engine_; }

 private:
  void restore();
  void worker_loop();
  void store_job(const DiscoveryJob& job);

  Engine& engine_;
  Journal journal_;
  ChatSessions chats_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, Manuscript> manuscripts_;
  std::map<std::string, DiscoveryJob> jobs_;
  std::map<std::string, std::uint64_t> versions_;
  std::deque<std::string> queue_;
  bool running_job_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace refweave
