#include "refweave/retry.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "refweave/error.hpp"

namespace refweave {

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  double ms = base_delay_ms * std::pow(factor, retry);
  if (jitter_fraction > 0) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> dist(1.0 - jitter_fraction, 1.0 + jitter_fraction);
    ms *= dist(rng);
  }
  return std::chrono::milliseconds(static_cast<long long>(std::llround(ms)));
}

void RetryPolicy::validate() const {
  if (base_delay_ms <= 0 || factor <= 1.0 || max_attempts <= 0 || jitter_fraction < 0 ||
      jitter_fraction >= 1) {
    throw Error(Errc::ConfigError, "invalid retry policy");
  }
}

void RealSleeper::sleep(std::chrono::milliseconds duration) { std::this_thread::sleep_for(duration); }

void RecordingSleeper::sleep(std::chrono::milliseconds duration) {
  std::lock_guard lock(mutex_);
  delays_.push_back(duration);
}

std::vector<std::chrono::milliseconds> RecordingSleeper::delays() const {
  std::lock_guard lock(mutex_);
  return delays_;
}

bool is_retryable_status(int status) { return status == 429 || status >= 500; }

RetryOutcome send_with_retry(http::Transport& transport, const http::Request& request,
                             const RetryPolicy& policy, Sleeper& sleeper) {
  RetryOutcome outcome;
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (attempt > 0) sleeper.sleep(policy.delay(attempt - 1));
    ++outcome.attempts;
    try {
      auto response = http::fetch(transport, request);
      const bool retry = is_retryable_status(response.status);
      outcome.last_error = "HTTP " + std::to_string(response.status);
      outcome.response = std::move(response);
      if (!retry) return outcome;
    } catch (const Error& e) {
      if (e.code() != Errc::NetworkError) throw;
      outcome.response.reset();
      outcome.last_error = e.what();
    }
  }
  return outcome;
}

}  // namespace refweave
