#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "refweave/error.hpp"
#include "refweave/http.hpp"

namespace refweave::llm {

enum class TemplateId { Route, Keywords, MatchScore, Chat };

std::string_view to_string(TemplateId id);
TemplateId template_from_string(std::string_view name);

using Variables = std::map<std::string, std::string>;

struct LlmRequest {
  TemplateId template_id = TemplateId::Chat;
  Variables variables;
  int max_output_tokens = 1024;
  double temperature = 0.0;

  /// Request with the per-template default temperature (0.0 for pipeline
  /// stages, 0.7 for chat).
  static LlmRequest make(TemplateId id, Variables variables, int max_output_tokens = 1024);
};

struct LlmStructuredResponse {
  std::string raw_text;
  std::optional<nlohmann::json> parsed;
  int attempts = 0;
};

struct PromptTemplate {
  TemplateId id;
  std::string version;
  std::string system;
  std::string user;  // contains {{slot}} placeholders
  std::vector<std::string> slots;
};

const PromptTemplate& prompt_template(TemplateId id);

struct RenderedPrompt {
  std::string system;
  std::string user;
};

/// Fills every slot; throws InvalidArgument when a required slot is missing.
RenderedPrompt render(const LlmRequest& request);

/// Inverse of the slot layout: recovers `<slot>` blocks from a rendered
/// user prompt. Used by local endpoints that only see the wire prompt.
Variables extract_slots(std::string_view user_prompt);

struct ProviderCall {
  const LlmRequest& request;
  RenderedPrompt prompt;
  int attempt = 1;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Returns raw completion text. Throws ProviderUnreachable.
  virtual std::string complete(const ProviderCall& call) = 0;
  virtual bool healthy() { return true; }
};

/// Chat-completion style HTTP endpoint.
class ChatCompletionProvider : public Provider {
 public:
  ChatCompletionProvider(http::Transport& transport, std::string endpoint, std::string model,
                         std::string api_key);
  std::string complete(const ProviderCall& call) override;
  bool healthy() override;

  static nlohmann::json request_body(const ProviderCall& call, std::string_view model);

 private:
  http::Transport& transport_;
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
};

/// Deterministic stand-in for a small local model: lexical routing, keyword
/// extraction and overlap scoring computed from the request variables.
class HeuristicResponder {
 public:
  static std::string respond(TemplateId id, const Variables& variables);
};

struct MockOptions {
  enum class Fallback { None, StaticDirectory, Heuristic };
  std::filesystem::path fixtures_dir;
  Fallback fallback = Fallback::Heuristic;
  std::filesystem::path static_dir;  // <template>.txt per template
};

/// Fixture lookup order: scripted queue, `<name>.attempt<N>.txt`,
/// `<name>.txt`, then the configured fallback.
class MockProvider : public Provider {
 public:
  explicit MockProvider(MockOptions options = {});
  std::string complete(const ProviderCall& call) override;

  /// `<template>-<first 16 hex of sha256(canonical variables)>`.
  static std::string fixture_name(const LlmRequest& request);

  void script(TemplateId id, std::vector<std::string> responses);

 private:
  MockOptions options_;
  std::mutex mutex_;
  std::map<TemplateId, std::deque<std::string>> scripted_;
};

struct Violation {
  Errc code = Errc::SchemaViolation;
  std::string message;
};

using Validator = std::function<std::optional<Violation>(const nlohmann::json&)>;

/// Declared schemas: "routing", "keywords", "match_score".
std::optional<Violation> validate_schema(std::string_view schema_id, const nlohmann::json& value);

/// Pulls the first JSON object out of model text (code fences tolerated).
std::optional<nlohmann::json> extract_json(std::string_view text);

inline constexpr int kMaxStructuredAttempts = 3;

class Gateway {
 public:
  explicit Gateway(Provider& provider, int max_in_flight = 4);

  /// Parses and validates; on failure re-prompts with a repair instruction,
  /// at most kMaxStructuredAttempts tries in total. Throws the code of the
  /// last violation (SchemaViolation unless a validator names another).
  LlmStructuredResponse complete_structured(const LlmRequest& request, std::string_view schema_id,
                                            const Validator& extra = {});

  std::string complete_text(const LlmRequest& request);

  /// Logical calls (one per complete_* invocation).
  std::size_t calls() const { return calls_.load(); }
  /// Provider round trips, including repair retries.
  std::size_t provider_requests() const { return provider_requests_.load(); }
  bool healthy() { return provider_.healthy(); }

 private:
  std::string call_provider(const ProviderCall& call);

  Provider& provider_;
  std::counting_semaphore<64> limiter_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> provider_requests_{0};
};

/// "[0] first\n[1] second" rendering used by list-valued slots.
std::string numbered_lines(const std::vector<std::string>& items);
std::string numbered_lines(const std::vector<std::pair<std::size_t, std::string>>& items);
/// Parses lines of the form "[n] text".
std::vector<std::pair<std::size_t, std::string>> parse_numbered_lines(std::string_view block);

}  // namespace refweave::llm
