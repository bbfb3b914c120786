#include "refweave/chat.hpp"

#include <atomic>
#include <chrono>
#include <random>

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave {

std::string_view to_string(Role role) { return role == Role::User ? "user" : "assistant"; }

Role role_from_string(std::string_view name) {
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw Error(Errc::InvalidArgument, "unknown chat role: " + std::string(name));
}

ChatContext open_session(const DiscoveryResult& result, std::size_t candidate_index,
                         std::string_view paper_summary) {
  if (candidate_index >= result.candidates.size()) {
    throw Error(Errc::NoSuchCandidate, "candidate " + std::to_string(candidate_index) + " of " +
                                           std::to_string(result.candidates.size()));
  }
  ChatContext ctx;
  ctx.paper_summary = std::string(paper_summary);
  ctx.reference = result.candidates[candidate_index];
  ctx.metadata.trace = result.trace;
  ctx.metadata.claim = result.claim;
  return ctx;
}

std::string describe_trace(const PipelineTrace& trace) {
  std::string out = "Routed to " + std::string(to_string(trace.routing.primary_repo));
  if (trace.routing.secondary_repo) {
    out += " (secondary " + std::string(to_string(*trace.routing.secondary_repo)) + ")";
  }
  char conf[16];
  std::snprintf(conf, sizeof conf, "%.2f", trace.routing.confidence);
  out += ", confidence " + std::string(conf) + ".";
  if (trace.used_secondary) out += " The secondary repository was searched.";
  for (const auto& q : trace.queries) {
    out += "\nQuery " + std::to_string(q.claim_index) + ": " + q.query_string;
  }
  return out;
}

std::string render_history(const std::vector<ChatTurn>& turns) {
  const std::size_t from = turns.size() > kChatWindowTurns ? turns.size() - kChatWindowTurns : 0;
  std::string out;
  for (std::size_t i = from; i < turns.size(); ++i) {
    if (!out.empty()) out += '\n';
    out += turns[i].role == Role::User ? "User: " : "Assistant: ";
    out += turns[i].text;
  }
  return out;
}

ChatContext send(const ChatContext& context, std::string_view user_text, llm::Gateway& gateway) {
  const auto message = text::trim(user_text);
  if (message.empty()) throw Error(Errc::InvalidArgument, "empty chat message");
  auto request = llm::LlmRequest::make(llm::TemplateId::Chat,
                                       {{"summary", context.paper_summary},
                                        {"claim", context.metadata.claim.sentence},
                                        {"reference", reference_context(context.reference)},
                                        {"trace", describe_trace(context.metadata.trace)},
                                        {"history", render_history(context.turns)},
                                        {"message", message}},
                                       600);
  auto reply = text::trim(gateway.complete_text(request));
  if (reply.empty()) throw Error(Errc::ProviderRefusal, "empty chat reply");
  ChatContext next = context;
  next.turns.push_back({Role::User, message});
  next.turns.push_back({Role::Assistant, reply});
  return next;
}

std::string new_id(std::string_view prefix) {
  static std::atomic<std::uint64_t> counter{0};
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto now = std::chrono::system_clock::now().time_since_epoch().count();
  const auto seed = std::to_string(now) + ":" + std::to_string(counter.fetch_add(1)) + ":" +
                    std::to_string(rng());
  return std::string(prefix) + text::sha256_hex(seed).substr(0, 16);
}

std::string ChatSessions::open(ChatContext context) {
  const auto id = new_id("chat-");
  restore(id, std::move(context));
  if (persist_) persist_(id, *get(id));
  return id;
}

void ChatSessions::restore(const std::string& id, ChatContext context) {
  auto session = std::make_shared<Session>();
  session->context = std::move(context);
  std::lock_guard lock(mutex_);
  sessions_[id] = std::move(session);
}

std::shared_ptr<ChatSessions::Session> ChatSessions::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::optional<ChatContext> ChatSessions::get(const std::string& id) const {
  auto session = find(id);
  if (!session) return std::nullopt;
  std::lock_guard lock(session->send_mutex);
  return session->context;
}

std::string ChatSessions::send(const std::string& id, std::string_view user_text,
                               llm::Gateway& gateway) {
  auto session = find(id);
  if (!session) throw Error(Errc::NotFound, "no chat session " + id);
  std::lock_guard lock(session->send_mutex);
  auto next = refweave::send(session->context, user_text, gateway);
  if (persist_) persist_(id, next);
  session->context = std::move(next);
  return session->context.turns.back().text;
}

std::vector<std::string> ChatSessions::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

}  // namespace refweave
