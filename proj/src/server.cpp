#include "refweave/server.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "refweave/serialize.hpp"

namespace refweave {

using nlohmann::json;

int http_status_for(Errc code) {
  switch (code) {
    case Errc::NotFound:
    case Errc::NoSuchCandidate:
      return 404;
    case Errc::Conflict:
      return 409;
    case Errc::MalformedLatex:
    case Errc::EmptySelection:
    case Errc::InvalidSelection:
    case Errc::KeyBibMismatch:
    case Errc::BibParseError:
    case Errc::InvalidArgument:
      return 400;
    case Errc::ProviderUnreachable:
    case Errc::SchemaViolation:
    case Errc::ProviderRefusal:
    case Errc::InvalidRepoName:
    case Errc::BatchShapeMismatch:
      return 502;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, {{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status_for(code));
}

json parse_body(const httplib::Request& req) {
  try {
    auto body = json::parse(req.body);
    if (!body.is_object()) throw Error(Errc::InvalidArgument, "request body must be an object");
    return body;
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& body, const char* name) {
  if (!body.contains(name)) throw Error(Errc::InvalidArgument, std::string("missing field ") + name);
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::InvalidArgument, std::string("bad type for field ") + name);
  }
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
    try {
      inner(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_json(res, {{"error", {{"code", "Internal"}, {"message", e.what()}}}}, 500);
    }
  };
}

json manuscript_json(const std::string& id, const Manuscript& ms) {
  json j = ms;
  j["manuscript_id"] = id;
  return j;
}

}  // namespace

ApiServer::ApiServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::install_routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/api/manuscript", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    auto ms = load_manuscript(field<std::string>(body, "tex"), body.value("bib", std::string()),
                              body.value("bib_path", std::string("references.bib")));
    const auto id = service_.add_manuscript(ms);
    send_json(res, {{"manuscript_id", id}, {"revision", ms.revision}, {"schema", ms.schema}}, 201);
  }));

  s.Get(R"(/api/manuscript/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    auto ms = service_.manuscript(id);
    if (!ms) throw Error(Errc::NotFound, "no manuscript " + id);
    send_json(res, manuscript_json(id, *ms));
  }));

  s.Post("/api/discover", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto job_id = service_.submit(field<std::string>(body, "manuscript_id"),
                                        field<std::size_t>(body, "start_offset"),
                                        field<std::size_t>(body, "end_offset"));
    send_json(res, {{"job_id", job_id}}, 202);
  }));

  s.Get(R"(/api/jobs/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    if (!service_.job(id)) throw Error(Errc::NotFound, "no job " + id);
    auto seen = std::make_shared<std::uint64_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, id, seen](std::size_t, httplib::DataSink& sink) {
          const auto version = service_.wait_for_change(id, *seen, std::chrono::seconds(15));
          if (version == *seen) {
            const std::string ping = ": keep-alive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          *seen = version;
          const auto job = service_.job(id);
          json event = {{"id", id},
                        {"state", to_string(job->state)},
                        {"timings_ms", job->timings_ms},
                        {"error", job->error ? json(*job->error) : json(nullptr)}};
          const auto frame = "event: state\ndata: " + event.dump() + "\n\n";
          if (!sink.write(frame.data(), frame.size())) return false;
          if (is_terminal(job->state)) sink.done();
          return true;
        });
  }));

  s.Get(R"(/api/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    auto job = service_.job(id);
    if (!job) throw Error(Errc::NotFound, "no job " + id);
    send_json(res, *job);
  }));

  s.Post("/api/insert", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    std::optional<std::uint64_t> revision;
    if (body.contains("revision")) revision = field<std::uint64_t>(body, "revision");
    const auto out = service_.insert(field<std::string>(body, "job_id"),
                                     field<std::size_t>(body, "candidate_index"), revision);
    send_json(res, {{"manuscript_id", out.manuscript_id},
                    {"revision", out.revision},
                    {"cite_key", out.cite_key},
                    {"bib_appended", out.bib_appended},
                    {"tex_source", out.tex_source},
                    {"bib_source", out.bib_source},
                    {"bib_path", out.bib_path}});
  }));

  s.Post("/api/chat/open", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto sid = service_.open_chat(field<std::string>(body, "job_id"),
                                        field<std::size_t>(body, "candidate_index"));
    send_json(res, {{"session_id", sid}}, 201);
  }));

  s.Post(R"(/api/chat/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto reply = service_.chat_send(req.matches[1].str(), field<std::string>(body, "text"));
    send_json(res, {{"reply", reply}});
  }));

  s.Get(R"(/api/chat/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto sid = req.matches[1].str();
    auto ctx = service_.chat(sid);
    if (!ctx) throw Error(Errc::NotFound, "no chat session " + sid);
    json j = *ctx;
    j["session_id"] = sid;
    send_json(res, j);
  }));

  s.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
    const auto h = service_.health();
    send_json(res, {{"ok", h.ok}, {"grobid_ok", h.grobid_ok}, {"llm_ok", h.llm_ok}});
  }));
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) {
    throw Error(Errc::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::listen() { server_->listen_after_bind(); }

void ApiServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void ApiServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace refweave
