#include "refweave/http.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave::http {

using nlohmann::json;

std::optional<std::string> find_header(const Headers& headers, std::string_view name) {
  const auto wanted = text::lower_ascii(name);
  for (const auto& [k, v] : headers) {
    if (text::lower_ascii(k) == wanted) return v;
  }
  return std::nullopt;
}

Url Url::parse(std::string_view url) {
  static const std::regex kUrl(R"(^(https?)://([^/:?#]+)(?::(\d+))?([^#]*)$)", std::regex::icase);
  std::cmatch m;
  if (!std::regex_match(url.data(), url.data() + url.size(), m, kUrl)) {
    throw Error(Errc::InvalidArgument, "unsupported URL '" + std::string(url) + "'");
  }
  Url out;
  out.scheme = text::lower_ascii(m[1].str());
  out.host = text::lower_ascii(m[2].str());
  out.port = m[3].matched ? std::stoi(m[3].str()) : (out.scheme == "https" ? 443 : 80);
  out.target = m[4].str().empty() ? "/" : m[4].str();
  return out;
}

std::string Url::origin() const {
  const bool default_port = (scheme == "https" && port == 443) || (scheme == "http" && port == 80);
  return scheme + "://" + host + (default_port ? "" : ":" + std::to_string(port));
}

std::string host_of(std::string_view url) { return Url::parse(url).host; }

Response LiveTransport::send(const Request& request) {
  const auto url = Url::parse(request.url);
  httplib::Client client(url.origin());
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(request.timeout);
  client.set_write_timeout(request.timeout);
  client.set_follow_location(false);

  httplib::Headers headers;
  std::string content_type = "application/octet-stream";
  for (const auto& [k, v] : request.headers) {
    if (text::lower_ascii(k) == "content-type") {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }
  httplib::Result result = request.method == "POST"
                               ? client.Post(url.target, headers, request.body, content_type)
                               : client.Get(url.target, headers);
  if (!result) {
    throw Error(Errc::NetworkError,
                request.method + " " + request.url + ": " + httplib::to_string(result.error()));
  }
  Response response;
  response.status = result->status;
  response.body = result->body;
  for (const auto& [k, v] : result->headers) response.headers.emplace_back(k, v);
  return response;
}

ThrottledTransport::ThrottledTransport(Transport& inner, std::string host,
                                       std::chrono::milliseconds min_interval)
    : inner_(inner), host_(std::move(host)), min_interval_(min_interval) {}

Response ThrottledTransport::send(const Request& request) {
  if (host_of(request.url) == host_) {
    std::lock_guard lock(mutex_);
    if (last_) {
      const auto next = *last_ + min_interval_;
      std::this_thread::sleep_until(next);
    }
    last_ = std::chrono::steady_clock::now();
  }
  return inner_.send(request);
}

bool EgressPolicy::allows(const Request& request) const {
  const auto host = host_of(request.url);
  if (hosts.contains(host)) return true;
  if (request.redirect_origin_host == "doi.org") {
    return allow_doi_redirects || redirect_hosts.contains(host);
  }
  return false;
}

GuardedTransport::GuardedTransport(Transport& inner, EgressPolicy policy)
    : inner_(inner), policy_(std::move(policy)) {}

bool GuardedTransport::enforce_allowlist(const Request& request) {
  if (policy_.allows(request)) return true;
  const auto host = host_of(request.url);
  spdlog::warn("egress denied: {} {}", request.method, request.url);
  std::lock_guard lock(mutex_);
  audit_.push_back({host, request.url, std::chrono::system_clock::now()});
  return false;
}

Response GuardedTransport::send(const Request& request) {
  if (!enforce_allowlist(request)) {
    throw Error(Errc::EgressDenied, "host '" + host_of(request.url) + "' is not allowlisted");
  }
  return inner_.send(request);
}

std::vector<AuditEntry> GuardedTransport::audit_log() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

void RequestLog::add(const Request& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
}

std::vector<Request> RequestLog::snapshot() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t RequestLog::count_for_host(std::string_view host) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& r : requests_) {
    if (host_of(r.url) == host) ++n;
  }
  return n;
}

void RequestLog::clear() {
  std::lock_guard lock(mutex_);
  requests_.clear();
}

Response RecordingTransport::send(const Request& request) {
  log_.add(request);
  return inner_.send(request);
}

FixtureStore::FixtureStore(std::filesystem::path directory) : dir_(std::move(directory)) {
  const auto index = dir_ / "index.json";
  if (!std::filesystem::exists(index)) return;
  std::ifstream in(index);
  const auto doc = json::parse(in);
  for (const auto& item : doc) {
    Record r;
    r.method = item.at("method");
    r.url = item.at("url");
    r.status = item.at("status");
    for (const auto& h : item.at("headers")) r.headers.emplace_back(h.at(0), h.at(1));
    r.body_sha256 = item.at("body_sha256");
    r.recorded_at = item.value("recorded_at", "");
    records_.emplace(item.at("key").get<std::string>(), std::move(r));
  }
}

std::string FixtureStore::key(const Request& request) {
  std::string k = request.method + " " + request.url;
  if (const auto accept = request.header("Accept")) k += " accept=" + *accept;
  if (!request.body.empty()) k += " body=" + text::sha256_hex(request.body);
  return k;
}

std::optional<Response> FixtureStore::find(const Request& request) const {
  std::lock_guard lock(mutex_);
  const auto it = records_.find(key(request));
  if (it == records_.end()) return std::nullopt;
  std::ifstream in(dir_ / "blobs" / it->second.body_sha256, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream body;
  body << in.rdbuf();
  Response response;
  response.status = it->second.status;
  response.headers = it->second.headers;
  response.body = body.str();
  return response;
}

void FixtureStore::put(const Request& request, const Response& response) {
  const auto digest = text::sha256_hex(response.body);
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(dir_ / "blobs");
  const auto blob = dir_ / "blobs" / digest;
  if (!std::filesystem::exists(blob)) {
    std::ofstream out(blob, std::ios::binary);
    out << response.body;
  }
  Record r;
  r.method = request.method;
  r.url = request.url;
  r.status = response.status;
  for (const auto& [k, v] : response.headers) {
    const auto lk = text::lower_ascii(k);
    if (lk == "content-type" || lk == "location") r.headers.emplace_back(k, v);
  }
  r.body_sha256 = digest;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  r.recorded_at = stamp;
  records_[key(request)] = std::move(r);
  save_index();
}

void FixtureStore::save_index() const {
  json doc = json::array();
  for (const auto& [k, r] : records_) {
    json headers = json::array();
    for (const auto& [hk, hv] : r.headers) headers.push_back({hk, hv});
    doc.push_back({{"key", k},
                   {"method", r.method},
                   {"url", r.url},
                   {"status", r.status},
                   {"headers", headers},
                   {"body_sha256", r.body_sha256},
                   {"recorded_at", r.recorded_at}});
  }
  const auto tmp = dir_ / "index.json.tmp";
  {
    std::ofstream out(tmp);
    out << doc.dump(1) << "\n";
  }
  std::filesystem::rename(tmp, dir_ / "index.json");
}

std::set<std::string> FixtureStore::hosts() const {
  std::lock_guard lock(mutex_);
  std::set<std::string> out;
  for (const auto& [k, r] : records_) {
    out.insert(host_of(r.url));
    if (const auto loc = find_header(r.headers, "Location")) out.insert(host_of(*loc));
  }
  return out;
}

std::size_t FixtureStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

Response ReplayTransport::send(const Request& request) {
  if (auto response = store_.find(request)) return *response;
  throw Error(Errc::NetworkError, "no recorded fixture for " + FixtureStore::key(request));
}

Response CaptureTransport::send(const Request& request) {
  auto response = inner_.send(request);
  store_.put(request, response);
  return response;
}

Response RouterTransport::send(const Request& request) {
  const auto it = routes_.find(host_of(request.url));
  return it == routes_.end() ? fallback_.send(request) : it->second->send(request);
}

Response fetch(Transport& transport, Request request, int max_redirects) {
  const auto origin = host_of(request.url);
  for (int hop = 0;; ++hop) {
    auto response = transport.send(request);
    const bool redirect = response.status == 301 || response.status == 302 ||
                          response.status == 303 || response.status == 307 ||
                          response.status == 308;
    if (!redirect) return response;
    const auto location = response.header("Location");
    if (!location || hop >= max_redirects) return response;
    auto next = *location;
    if (!next.empty() && next.front() == '/') next = Url::parse(request.url).origin() + next;
    if (response.status == 303) {
      request.method = "GET";
      request.body.clear();
    }
    request.url = next;
    request.redirect_origin_host = origin;
  }
}

MultipartBody multipart_file(std::string_view field, std::string_view filename,
                             std::string_view mime, std::string_view bytes) {
  const auto boundary = "refweave-" + text::sha256_hex(bytes).substr(0, 24);
  MultipartBody out;
  out.content_type = "multipart/form-data; boundary=" + boundary;
  out.body = "--" + boundary + "\r\n";
  out.body += "Content-Disposition: form-data; name=\"" + std::string(field) + "\"; filename=\"" +
              std::string(filename) + "\"\r\n";
  out.body += "Content-Type: " + std::string(mime) + "\r\n\r\n";
  out.body += bytes;
  out.body += "\r\n--" + boundary + "--\r\n";
  return out;
}

}  // namespace refweave::http
