#include <doctest.h>

#include <httplib.h>

#include "catalog_upstream.hpp"
#include "refweave/corpus.hpp"
#include "refweave/error.hpp"
#include "refweave/journal.hpp"
#include "refweave/serialize.hpp"
#include "refweave/server.hpp"
#include "test_env.hpp"

using namespace refweave;
using nlohmann::json;
using refweave::testing::CatalogUpstream;

namespace {

const std::string kClaim = "Transformers rely on attention.";

struct Stack {
  explicit Stack(const std::filesystem::path& data_dir, llm::Provider* provider = nullptr)
      : engine(testing::offline_config(data_dir), [&] {
          EngineHooks h;
          h.upstream = &upstream;
          h.provider = provider;
          h.sleeper = &sleeper;
          h.arxiv_interval = std::chrono::milliseconds(0);
          return h;
        }()),
        service(engine),
        api(service) {
    port = api.bind("127.0.0.1", 0);
    api.start();
  }

  httplib::Client client() {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }

  CatalogUpstream upstream{testing::load_catalog(testing::catalog_path())};
  RecordingSleeper sleeper;
  Engine engine;
  Service service;
  ApiServer api;
  int port = 0;
};

json post(httplib::Client& c, const std::string& path, const json& body, int expected) {
  auto res = c.Post(path, body.dump(), "application/json");
  REQUIRE(res);
  CHECK_MESSAGE(res->status == expected, path << " -> " << res->body);
  return json::parse(res->body);
}

json get(httplib::Client& c, const std::string& path, int expected) {
  auto res = c.Get(path);
  REQUIRE(res);
  CHECK_MESSAGE(res->status == expected, path << " -> " << res->body);
  return json::parse(res->body);
}

std::string error_code(const json& body) { return body.at("error").at("code").get<std::string>(); }

json corpus_upload() {
  const auto dir = testing::corpus_path().parent_path();
  return {{"tex", read_file(dir / "manuscript.tex")},
          {"bib", read_file(dir / "references.bib")},
          {"bib_path", "references.bib"}};
}

std::pair<std::size_t, std::size_t> claim_span(const std::string& claim) {
  const auto corpus = load_corpus(testing::corpus_path());
  const auto s = select_text(corpus.manuscript, claim);
  return {s.start_offset, s.end_offset};
}

/// Reads the job's event stream to the end and returns the states seen.
std::vector<std::string> stream_states(httplib::Client& c, const std::string& job_id, std::string* raw = nullptr) {
  std::string body;
  auto res = c.Get("/api/jobs/" + job_id + "/events", [&](const char* data, std::size_t n) {
    body.append(data, n);
    return true;
  });
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "text/event-stream");
  std::vector<std::string> states;
  std::size_t pos = 0;
  while ((pos = body.find("data: ", pos)) != std::string::npos) {
    const auto end = body.find('\n', pos);
    states.push_back(json::parse(body.substr(pos + 6, end - pos - 6)).at("state"));
    pos = end;
  }
  if (raw) *raw = body;
  return states;
}

std::string run_job(Stack& stack, httplib::Client& c, std::string* manuscript_id = nullptr) {
  const auto ms = post(c, "/api/manuscript", corpus_upload(), 201);
  const auto [start, end] = claim_span(kClaim);
  const auto job = post(c, "/api/discover",
                        {{"manuscript_id", ms.at("manuscript_id")}, {"start_offset", start}, {"end_offset", end}},
                        202);
  stack.service.wait_idle();
  if (manuscript_id) *manuscript_id = ms.at("manuscript_id");
  return job.at("job_id");
}

}  // namespace

TEST_CASE("manuscript upload and retrieval") {
  testing::TempDir dir;
  Stack stack(dir.path());
  auto c = stack.client();
  const auto created = post(c, "/api/manuscript", corpus_upload(), 201);
  const auto id = created.at("manuscript_id").get<std::string>();
  CHECK(id.rfind("ms-", 0) == 0);
  CHECK(created.at("revision") == 0);
  CHECK_FALSE(created.at("schema").at("title").get<std::string>().empty());

  const auto fetched = get(c, "/api/manuscript/" + id, 200);
  CHECK(fetched.at("manuscript_id") == id);
  CHECK(fetched.at("tex_source") == corpus_upload().at("tex"));

  CHECK(error_code(get(c, "/api/manuscript/ms-none", 404)) == "NotFound");
  auto res = c.Post("/api/manuscript", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(error_code(json::parse(res->body)) == "InvalidArgument");
  CHECK(error_code(post(c, "/api/manuscript", json::array(), 400)) == "InvalidArgument");
  CHECK(error_code(post(c, "/api/manuscript", {{"bib", ""}}, 400)) == "InvalidArgument");
  CHECK(error_code(post(c, "/api/manuscript", {{"tex", 5}}, 400)) == "InvalidArgument");
  CHECK(error_code(post(c, "/api/manuscript", {{"tex", "plain words only"}}, 400)) == "MalformedLatex");
  CHECK(error_code(post(c, "/api/manuscript", {{"tex", "\\section{A}\nText."}, {"bib", "@article{x, title={"}},
                        400)) == "BibParseError");
}

TEST_CASE("discovery over HTTP with streamed progress") {
  testing::TempDir dir;
  Stack stack(dir.path());
  auto c = stack.client();
  const auto ms = post(c, "/api/manuscript", corpus_upload(), 201);
  const auto ms_id = ms.at("manuscript_id").get<std::string>();
  const auto [start, end] = claim_span(kClaim);

  const auto job = post(c, "/api/discover", {{"manuscript_id", ms_id}, {"start_offset", start}, {"end_offset", end}},
                        202);
  const auto job_id = job.at("job_id").get<std::string>();
  CHECK(job_id.rfind("job-", 0) == 0);

  std::string raw;
  const auto states = stream_states(c, job_id, &raw);
  REQUIRE_FALSE(states.empty());
  CHECK(states.back() == "DONE");
  const std::vector<std::string> order = {"QUEUED", "ROUTING", "SEARCHING", "VERIFYING", "MATCHING", "DONE"};
  std::size_t last = 0;
  for (const auto& s : states) {
    const auto at = static_cast<std::size_t>(std::find(order.begin(), order.end(), s) - order.begin());
    REQUIRE(at < order.size());
    CHECK(at >= last);
    last = at;
  }
  CHECK(raw.find("event: state\n") != std::string::npos);

  const auto done = get(c, "/api/jobs/" + job_id, 200);
  CHECK(done.at("state") == "DONE");
  CHECK(done.at("selection").at("text") == kClaim);
  const auto& candidates = done.at("result").at("candidates");
  REQUIRE_FALSE(candidates.empty());
  CHECK(candidates.size() <= 5);
  CHECK(done.at("result").at("top") == 0);

  // A finished job's stream replays the terminal state and closes.
  CHECK(stream_states(c, job_id) == std::vector<std::string>{"DONE"});

  CHECK(error_code(get(c, "/api/jobs/job-none", 404)) == "NotFound");
  auto missing = c.Get("/api/jobs/job-none/events");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(error_code(post(c, "/api/discover", {{"manuscript_id", "ms-none"}, {"start_offset", 0}, {"end_offset", 1}},
                        404)) == "NotFound");
  CHECK(error_code(post(c, "/api/discover", {{"manuscript_id", ms_id}, {"start_offset", 5}, {"end_offset", 2}},
                        400)) == "InvalidSelection");
  CHECK(error_code(post(c, "/api/discover",
                        {{"manuscript_id", ms_id}, {"start_offset", 0}, {"end_offset", 100000000}}, 400)) ==
        "InvalidSelection");
  CHECK(error_code(post(c, "/api/discover", {{"manuscript_id", ms_id}, {"start_offset", "0"}, {"end_offset", 1}},
                        400)) == "InvalidArgument");
}

TEST_CASE("citation insertion over HTTP") {
  testing::TempDir dir;
  Stack stack(dir.path());
  auto c = stack.client();
  std::string ms_id;
  const auto job_id = run_job(stack, c, &ms_id);
  const auto job = get(c, "/api/jobs/" + job_id, 200);
  REQUIRE(job.at("state") == "DONE");
  const auto key = job.at("result").at("candidates").at(0).at("bibtex").at("key").get<std::string>();

  const auto out = post(c, "/api/insert", {{"job_id", job_id}, {"candidate_index", 0}, {"revision", 0}}, 200);
  CHECK(out.at("revision") == 1);
  CHECK(out.at("cite_key") == key);
  const auto tex = out.at("tex_source").get<std::string>();
  CHECK(tex.find("attention~\\cite{" + key + "}.") != std::string::npos);
  CHECK(out.at("bib_source").get<std::string>().find(key) != std::string::npos);
  CHECK(out.at("bib_path") == "references.bib");
  CHECK(get(c, "/api/manuscript/" + ms_id, 200).at("revision") == 1);

  CHECK(error_code(post(c, "/api/insert", {{"job_id", job_id}, {"candidate_index", 0}, {"revision", 0}}, 409)) ==
        "Conflict");
  const auto again = post(c, "/api/insert", {{"job_id", job_id}, {"candidate_index", 0}}, 200);
  CHECK(again.at("revision") == 2);
  CHECK(again.at("bib_appended") == false);
  CHECK(error_code(post(c, "/api/insert", {{"job_id", job_id}, {"candidate_index", 99}}, 404)) ==
        "NoSuchCandidate");
  CHECK(error_code(post(c, "/api/insert", {{"job_id", "job-none"}, {"candidate_index", 0}}, 404)) == "NotFound");
  CHECK(error_code(post(c, "/api/insert", {{"job_id", job_id}}, 400)) == "InvalidArgument");
}

TEST_CASE("chat over HTTP") {
  testing::TempDir dir;
  Stack stack(dir.path());
  auto c = stack.client();
  const auto job_id = run_job(stack, c);
  const auto opened = post(c, "/api/chat/open", {{"job_id", job_id}, {"candidate_index", 0}}, 201);
  const auto sid = opened.at("session_id").get<std::string>();
  CHECK(sid.rfind("chat-", 0) == 0);

  const auto reply = post(c, "/api/chat/" + sid, {{"text", "Which paragraph supports the claim?"}}, 200);
  CHECK_FALSE(reply.at("reply").get<std::string>().empty());
  const auto session = get(c, "/api/chat/" + sid, 200);
  CHECK(session.at("session_id") == sid);
  REQUIRE(session.at("turns").size() == 2);
  CHECK(session.at("turns").at(0).at("role") == "user");
  CHECK(session.at("turns").at(1).at("text") == reply.at("reply"));

  CHECK(error_code(post(c, "/api/chat/" + sid, {{"text", "   "}}, 400)) == "InvalidArgument");
  CHECK(get(c, "/api/chat/" + sid, 200).at("turns").size() == 2);
  CHECK(error_code(post(c, "/api/chat/chat-none", {{"text", "hi"}}, 404)) == "NotFound");
  CHECK(error_code(get(c, "/api/chat/chat-none", 404)) == "NotFound");
  CHECK(error_code(post(c, "/api/chat/open", {{"job_id", job_id}, {"candidate_index", 42}}, 404)) ==
        "NoSuchCandidate");
  CHECK(error_code(post(c, "/api/chat/open", {{"job_id", "job-none"}, {"candidate_index", 0}}, 404)) ==
        "NotFound");
}

TEST_CASE("a model outage surfaces as a failed job and a gateway error") {
  testing::TempDir dir;
  llm::MockProvider down({.fallback = llm::MockOptions::Fallback::None});
  Stack stack(dir.path(), &down);
  auto c = stack.client();
  const auto job_id = run_job(stack, c);
  const auto states = stream_states(c, job_id);
  CHECK(states.back() == "FAILED");
  const auto job = get(c, "/api/jobs/" + job_id, 200);
  CHECK(job.at("failed_stage") == "ROUTING");
  CHECK(job.at("error").get<std::string>().rfind("ROUTING: ", 0) == 0);
  CHECK(job.at("result").is_null());
  CHECK(error_code(post(c, "/api/chat/open", {{"job_id", job_id}, {"candidate_index", 0}}, 409)) == "Conflict");
  CHECK(error_code(post(c, "/api/insert", {{"job_id", job_id}, {"candidate_index", 0}}, 409)) == "Conflict");
}

TEST_CASE("health and CORS") {
  testing::TempDir dir;
  Stack stack(dir.path());
  auto c = stack.client();
  auto res = c.Get("/api/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  const auto h = json::parse(res->body);
  CHECK(h.at("ok") == true);
  CHECK(h.at("grobid_ok") == true);
  CHECK(h.at("llm_ok") == true);

  auto preflight = c.Options("/api/discover");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);
  CHECK(preflight->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
  CHECK(preflight->get_header_value("Access-Control-Allow-Headers") == "Content-Type");

  stack.upstream.fail_host("localhost", 0);
  CHECK(get(c, "/api/health", 200).at("grobid_ok") == false);
}

TEST_CASE("error codes map to HTTP statuses") {
  CHECK(http_status_for(Errc::NotFound) == 404);
  CHECK(http_status_for(Errc::NoSuchCandidate) == 404);
  CHECK(http_status_for(Errc::Conflict) == 409);
  CHECK(http_status_for(Errc::InvalidSelection) == 400);
  CHECK(http_status_for(Errc::ProviderUnreachable) == 502);
  CHECK(http_status_for(Errc::RepoUnavailable) == 500);
}

TEST_CASE("state survives a restart") {
  testing::TempDir dir;
  std::string job_id, ms_id, sid;
  {
    Stack stack(dir.path());
    auto c = stack.client();
    job_id = run_job(stack, c, &ms_id);
    post(c, "/api/insert", {{"job_id", job_id}, {"candidate_index", 0}}, 200);
    sid = post(c, "/api/chat/open", {{"job_id", job_id}, {"candidate_index", 0}}, 201).at("session_id");
    post(c, "/api/chat/" + sid, {{"text", "hello"}}, 200);
  }
  {
    // A job left mid-flight by a crash.
    Journal journal(dir.path() / "journal.jsonl", 0);
    DiscoveryJob stuck;
    stuck.id = "job-stuck";
    stuck.manuscript_id = ms_id;
    stuck.state = JobState::Verifying;
    journal.append("job", stuck.id, json(stuck));
  }
  Stack stack(dir.path());
  auto c = stack.client();
  CHECK(get(c, "/api/manuscript/" + ms_id, 200).at("revision") == 1);
  CHECK(get(c, "/api/jobs/" + job_id, 200).at("state") == "DONE");
  CHECK(get(c, "/api/chat/" + sid, 200).at("turns").size() == 2);
  const auto stuck = get(c, "/api/jobs/job-stuck", 200);
  CHECK(stuck.at("state") == "FAILED");
  CHECK(stuck.at("failed_stage") == "VERIFYING");
  CHECK(stuck.at("error") == "VERIFYING: interrupted by restart");
  post(c, "/api/chat/" + sid, {{"text", "again"}}, 200);
  CHECK(get(c, "/api/chat/" + sid, 200).at("turns").size() == 4);
}
