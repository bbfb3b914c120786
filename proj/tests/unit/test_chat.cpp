#include <doctest.h>

#include <set>
#include <thread>

#include "refweave/chat.hpp"
#include "refweave/error.hpp"

using namespace refweave;
using namespace refweave::llm;

namespace {

class CapturingProvider : public Provider {
 public:
  MockProvider mock;
  std::mutex mutex;
  std::vector<Variables> seen;
  std::string complete(const ProviderCall& call) override {
    {
      std::lock_guard lock(mutex);
      seen.push_back(call.request.variables);
    }
    return mock.complete(call);
  }
};

DiscoveryResult sample_result() {
  DiscoveryResult r;
  r.claim = {"Residual learning trains deep networks.", 0};
  r.trace.claims = {r.claim};
  r.trace.routing = {Repo::Arxiv, Repo::Biorxiv, 0.42, "cues"};
  SearchQuery q;
  q.query_string = "residual learning deep networks";
  r.trace.queries = {q};
  r.trace.used_secondary = false;
  for (int i = 0; i < 2; ++i) {
    CandidateReference c;
    c.record.title = i == 0 ? "Deep Residual Learning" : "Batch Normalization";
    c.record.abstract = "Abstract " + std::to_string(i);
    c.verifiable = true;
    c.matches = {{static_cast<std::size_t>(3 + i), 0.8, "r", "Residual learning eases deep networks."}};
    r.candidates.push_back(c);
  }
  r.top = 0;
  return r;
}

// Independent rendering of the last `window` turns.
std::string expected_history(const std::vector<ChatTurn>& turns, std::size_t window) {
  std::string out;
  for (std::size_t i = turns.size() > window ? turns.size() - window : 0; i < turns.size(); ++i) {
    out += (out.empty() ? "" : "\n") + std::string(turns[i].role == Role::User ? "User: " : "Assistant: ") +
           turns[i].text;
  }
  return out;
}

}  // namespace

TEST_CASE("sessions open from a finished discovery") {
  const auto result = sample_result();
  const auto ctx = open_session(result, 1, "Summary");
  CHECK(ctx.paper_summary == "Summary");
  CHECK(ctx.reference.record.title == "Batch Normalization");
  CHECK(ctx.metadata.claim.sentence == result.claim.sentence);
  CHECK(ctx.metadata.trace.queries.size() == 1);
  CHECK(ctx.turns.empty());
  try {
    open_session(result, 2, "");
    FAIL("expected NoSuchCandidate");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoSuchCandidate);
  }
  CHECK(role_from_string(to_string(Role::Assistant)) == Role::Assistant);
  CHECK_THROWS_AS(role_from_string("system"), Error);
}

TEST_CASE("trace description") {
  const auto text = describe_trace(sample_result().trace);
  CHECK(text == "Routed to arxiv (secondary biorxiv), confidence 0.42.\n"
                "Query 0: residual learning deep networks");
  auto trace = sample_result().trace;
  trace.routing.secondary_repo.reset();
  trace.used_secondary = true;
  CHECK(describe_trace(trace).find("arxiv, confidence 0.42. The secondary repository was searched.") !=
        std::string::npos);
}

TEST_CASE("send fills every slot and appends two turns") {
  CapturingProvider provider;
  Gateway gateway(provider);
  const auto ctx = open_session(sample_result(), 0, "Summary");
  const auto next = send(ctx, "  What does #3 show?  ", gateway);
  REQUIRE(next.turns.size() == 2);
  CHECK(next.turns[0].role == Role::User);
  CHECK(next.turns[0].text == "What does #3 show?");
  CHECK(next.turns[1].role == Role::Assistant);
  CHECK(next.turns[1].text.find("#3") != std::string::npos);
  CHECK(ctx.turns.empty());
  REQUIRE(provider.seen.size() == 1);
  const auto& v = provider.seen[0];
  CHECK(v.at("summary") == "Summary");
  CHECK(v.at("claim") == "Residual learning trains deep networks.");
  CHECK(v.at("reference") == reference_context(ctx.reference));
  CHECK(v.at("trace") == describe_trace(ctx.metadata.trace));
  CHECK(v.at("history").empty());
  CHECK(v.at("message") == "What does #3 show?");
}

TEST_CASE("history is limited to the last ten turns") {
  CapturingProvider provider;
  Gateway gateway(provider);
  auto ctx = open_session(sample_result(), 0, "Summary");
  std::vector<ChatTurn> shadow;
  for (int i = 0; i < 9; ++i) {
    ctx = send(ctx, "question " + std::to_string(i), gateway);
    CHECK(provider.seen.back().at("history") == expected_history(shadow, kChatWindowTurns));
    shadow = ctx.turns;
  }
  CHECK(ctx.turns.size() == 18);
  const auto history = provider.seen.back().at("history");
  CHECK(history.find("question 2") == std::string::npos);
  CHECK(history.rfind("User: question 3", 0) == 0);
  CHECK(history.find("question 8") == std::string::npos);
  CHECK(render_history({}) == "");
}

TEST_CASE("failed sends leave the context unchanged") {
  const auto ctx = open_session(sample_result(), 0, "Summary");
  SUBCASE("empty message") {
    MockProvider provider;
    Gateway gateway(provider);
    try {
      send(ctx, " \n ", gateway);
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidArgument);
    }
    CHECK(gateway.calls() == 0);
  }
  SUBCASE("empty reply") {
    MockProvider provider;
    provider.script(TemplateId::Chat, {"   "});
    Gateway gateway(provider);
    try {
      send(ctx, "hi", gateway);
      FAIL("expected ProviderRefusal");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ProviderRefusal);
    }
  }
  SUBCASE("outage") {
    MockProvider provider({.fallback = MockOptions::Fallback::None});
    Gateway gateway(provider);
    ChatSessions sessions;
    const auto id = sessions.open(ctx);
    CHECK_THROWS_AS(sessions.send(id, "hi", gateway), Error);
    CHECK(sessions.get(id)->turns.empty());
  }
  CHECK(ctx.turns.empty());
}

TEST_CASE("sessions are isolated and persisted") {
  MockProvider provider;
  Gateway gateway(provider);
  std::vector<std::pair<std::string, std::size_t>> persisted;
  ChatSessions sessions([&](const std::string& id, const ChatContext& c) {
    persisted.emplace_back(id, c.turns.size());
  });
  const auto result = sample_result();
  const auto a = sessions.open(open_session(result, 0, "S"));
  const auto b = sessions.open(open_session(result, 1, "S"));
  CHECK(a != b);
  CHECK(sessions.ids().size() == 2);

  const auto reply = sessions.send(a, "first", gateway);
  CHECK_FALSE(reply.empty());
  sessions.send(a, "second", gateway);
  CHECK(sessions.get(a)->turns.size() == 4);
  CHECK(sessions.get(b)->turns.empty());
  CHECK(sessions.get(b)->reference.record.title == "Batch Normalization");
  CHECK(persisted == std::vector<std::pair<std::string, std::size_t>>{{a, 0}, {b, 0}, {a, 2}, {a, 4}});

  try {
    sessions.send("chat-missing", "x", gateway);
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotFound);
  }
  CHECK_FALSE(sessions.get("chat-missing").has_value());

  sessions.restore("chat-restored", *sessions.get(a));
  CHECK(sessions.get("chat-restored")->turns.size() == 4);
}

TEST_CASE("concurrent sends to one session serialize") {
  MockProvider provider;
  Gateway gateway(provider, 8);
  ChatSessions sessions;
  const auto id = sessions.open(open_session(sample_result(), 0, "S"));
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { sessions.send(id, "message " + std::to_string(i), gateway); });
  }
  for (auto& t : threads) t.join();
  const auto turns = sessions.get(id)->turns;
  REQUIRE(turns.size() == 16);
  std::set<std::string> messages;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    CHECK(turns[i].role == (i % 2 == 0 ? Role::User : Role::Assistant));
    if (i % 2 == 0) messages.insert(turns[i].text);
    if (i % 2 == 1) CHECK(turns[i].text.find(turns[i - 1].text) != std::string::npos);
  }
  CHECK(messages.size() == 8);
}

TEST_CASE("ids are unique") {
  std::set<std::string> ids;
  for (int i = 0; i < 5000; ++i) ids.insert(new_id("job-"));
  CHECK(ids.size() == 5000);
  CHECK(new_id("x-").rfind("x-", 0) == 0);
  CHECK(new_id("x-").size() == 18);
}
