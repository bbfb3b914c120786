#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refweave/llm.hpp"
#include "refweave/matching.hpp"

namespace refweave {

enum class Role { User, Assistant };
std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatTurn {
  Role role = Role::User;
  std::string text;
};

struct ChatMetadata {
  PipelineTrace trace;
  Claim claim;
};

struct ChatContext {
  std::string paper_summary;
  CandidateReference reference;
  ChatMetadata metadata;
  std::vector<ChatTurn> turns;  // alternating, starting with the user
};

inline constexpr std::size_t kChatWindowTurns = 10;

/// Assembles the context from a finished discovery; no model calls.
ChatContext open_session(const DiscoveryResult& result, std::size_t candidate_index,
                         std::string_view paper_summary);

/// Human-readable trace for the CHAT prompt.
std::string describe_trace(const PipelineTrace& trace);

/// "User: ..." / "Assistant: ..." lines for the last kChatWindowTurns turns.
std::string render_history(const std::vector<ChatTurn>& turns);

/// One CHAT call. Returns the context with the user turn and the reply
/// appended; on failure the error propagates and `context` is untouched.
ChatContext send(const ChatContext& context, std::string_view user_text, llm::Gateway& gateway);

/// In-memory sessions with one in-flight send per session.
class ChatSessions {
 public:
  using Persist = std::function<void(const std::string& id, const ChatContext&)>;

  explicit ChatSessions(Persist persist = {}) : persist_(std::move(persist)) {}

  std::string open(ChatContext context);
  void restore(const std::string& id, ChatContext context);
  std::optional<ChatContext> get(const std::string& id) const;
  /// Throws NotFound for an unknown session.
  std::string send(const std::string& id, std::string_view user_text, llm::Gateway& gateway);
  std::vector<std::string> ids() const;

 private:
  struct Session {
    std::mutex send_mutex;
    ChatContext context;
  };
  std::shared_ptr<Session> find(const std::string& id) const;

  Persist persist_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

std::string new_id(std::string_view prefix);

}  // namespace refweave
