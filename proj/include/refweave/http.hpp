#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Every outbound byte leaves the engine through a Transport. Decorators
// stack on top of the wire transport: egress guard, request recorder,
// fixture capture/replay and per-host throttling.
namespace refweave::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

std::optional<std::string> find_header(const Headers& headers, std::string_view name);

struct Request {
  std::string method = "GET";
  std::string url;
  Headers headers;
  std::string body;
  std::chrono::seconds timeout{30};
  /// Host of the first request of a redirect chain; empty for direct requests.
  std::string redirect_origin_host;

  std::optional<std::string> header(std::string_view name) const {
    return find_header(headers, name);
  }
};

struct Response {
  int status = 0;
  Headers headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const {
    return find_header(headers, name);
  }
  bool ok() const { return status >= 200 && status < 300; }
};

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string target = "/";  // path + query

  /// Throws Error{InvalidArgument}.
  static Url parse(std::string_view url);
  std::string origin() const;
};

std::string host_of(std::string_view url);

class Transport {
 public:
  virtual ~Transport() = default;
  /// Sends one request without following redirects. Connection-level
  /// failures throw Error{NetworkError}.
  virtual Response send(const Request& request) = 0;
};

class LiveTransport : public Transport {
 public:
  Response send(const Request& request) override;
};

/// Enforces a minimum interval between requests to one host.
class ThrottledTransport : public Transport {
 public:
  ThrottledTransport(Transport& inner, std::string host, std::chrono::milliseconds min_interval);
  Response send(const Request& request) override;

 private:
  Transport& inner_;
  std::string host_;
  std::chrono::milliseconds min_interval_;
  std::mutex mutex_;
  std::optional<std::chrono::steady_clock::time_point> last_;
};

struct EgressPolicy {
  std::set<std::string> hosts;
  /// Publisher hosts reachable only as redirect targets of doi.org.
  std::set<std::string> redirect_hosts;
  bool allow_doi_redirects = false;

  bool allows(const Request& request) const;
};

struct AuditEntry {
  std::string host;
  std::string url;
  std::chrono::system_clock::time_point at;
};

/// Deny-by-default egress: requests to hosts outside the policy throw
/// Error{EgressDenied} and are appended to the audit log.
class GuardedTransport : public Transport {
 public:
  GuardedTransport(Transport& inner, EgressPolicy policy);
  Response send(const Request& request) override;

  bool enforce_allowlist(const Request& request);
  std::vector<AuditEntry> audit_log() const;
  const EgressPolicy& policy() const { return policy_; }

 private:
  Transport& inner_;
  EgressPolicy policy_;
  mutable std::mutex mutex_;
  std::vector<AuditEntry> audit_;
};

/// Thread-safe log of every request that reached a transport.
class RequestLog {
 public:
  void add(const Request& request);
  std::vector<Request> snapshot() const;
  std::size_t count_for_host(std::string_view host) const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<Request> requests_;
};

class RecordingTransport : public Transport {
 public:
  RecordingTransport(Transport& inner, RequestLog& log) : inner_(inner), log_(log) {}
  Response send(const Request& request) override;

 private:
  Transport& inner_;
  RequestLog& log_;
};

/// Content-addressed store of recorded responses: `index.json` maps a
/// request key to status, headers and the SHA-256 of the body stored under
/// `blobs/`.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path directory);

  static std::string key(const Request& request);

  std::optional<Response> find(const Request& request) const;
  void put(const Request& request, const Response& response);
  std::set<std::string> hosts() const;
  std::size_t size() const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Record {
    std::string method;
    std::string url;
    int status = 0;
    Headers headers;
    std::string body_sha256;
    std::string recorded_at;
  };
  void save_index() const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, Record> records_;
};

class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const FixtureStore& store) : store_(store) {}
  Response send(const Request& request) override;

 private:
  const FixtureStore& store_;
};

class CaptureTransport : public Transport {
 public:
  CaptureTransport(Transport& inner, FixtureStore& store) : inner_(inner), store_(store) {}
  Response send(const Request& request) override;

 private:
  Transport& inner_;
  FixtureStore& store_;
};

/// Dispatches by host; unknown hosts go to the fallback transport.
class RouterTransport : public Transport {
 public:
  explicit RouterTransport(Transport& fallback) : fallback_(fallback) {}
  void route(std::string host, Transport& transport) { routes_.emplace(std::move(host), &transport); }
  Response send(const Request& request) override;

 private:
  Transport& fallback_;
  std::map<std::string, Transport*, std::less<>> routes_;
};

/// Sends `request`, following up to `max_redirects` 3xx hops. Each hop goes
/// through `transport` again, so egress policy applies to every hop.
Response fetch(Transport& transport, Request request, int max_redirects = 5);

/// multipart/form-data body with one file part; the boundary is derived from
/// the content so identical uploads produce identical bytes.
struct MultipartBody {
  std::string content_type;
  std::string body;
};
MultipartBody multipart_file(std::string_view field, std::string_view filename,
                             std::string_view mime, std::string_view bytes);

}  // namespace refweave::http
