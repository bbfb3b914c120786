#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "refweave/http.hpp"

namespace refweave {

struct RetryPolicy {
  int base_delay_ms = 500;
  double factor = 2.0;
  int max_attempts = 4;
  double jitter_fraction = 0.1;

  /// Sleep before retry number `retry` (0-based): base * factor^retry, then
  /// scaled by a uniform factor in [1 - jitter, 1 + jitter].
  std::chrono::milliseconds delay(int retry) const;
  void validate() const;
};

class Sleeper {
 public:
  virtual ~Sleeper() = default;
  virtual void sleep(std::chrono::milliseconds duration) = 0;
};

class RealSleeper : public Sleeper {
 public:
  void sleep(std::chrono::milliseconds duration) override;
};

/// Records requested delays without sleeping.
class RecordingSleeper : public Sleeper {
 public:
  void sleep(std::chrono::milliseconds duration) override;
  std::vector<std::chrono::milliseconds> delays() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::chrono::milliseconds> delays_;
};

struct RetryOutcome {
  std::optional<http::Response> response;  // last response, if any arrived
  std::string last_error;
  int attempts = 0;
};

/// True for statuses worth retrying: 429 and 5xx.
bool is_retryable_status(int status);

/// Sends through `fetch` (redirects followed), retrying network failures,
/// 429 and 5xx up to `policy.max_attempts`. Other 4xx return immediately.
/// EgressDenied and other non-network errors propagate.
RetryOutcome send_with_retry(http::Transport& transport, const http::Request& request,
                             const RetryPolicy& policy, Sleeper& sleeper);

}  // namespace refweave
