#include "refweave/llm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "refweave/text.hpp"

namespace refweave::llm {

using nlohmann::json;

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::Route: return "ROUTE";
    case TemplateId::Keywords: return "KEYWORDS";
    case TemplateId::MatchScore: return "MATCH_SCORE";
    case TemplateId::Chat: return "CHAT";
  }
  return "CHAT";
}

TemplateId template_from_string(std::string_view name) {
  for (auto id : {TemplateId::Route, TemplateId::Keywords, TemplateId::MatchScore, TemplateId::Chat}) {
    if (to_string(id) == name) return id;
  }
  throw Error(Errc::InvalidArgument, "unknown template '" + std::string(name) + "'");
}

LlmRequest LlmRequest::make(TemplateId id, Variables variables, int max_output_tokens) {
  LlmRequest r;
  r.template_id = id;
  r.variables = std::move(variables);
  r.max_output_tokens = max_output_tokens;
  r.temperature = id == TemplateId::Chat ? 0.7 : 0.0;
  return r;
}

RenderedPrompt render(const LlmRequest& request) {
  const auto& tpl = prompt_template(request.template_id);
  std::string user = tpl.user;
  for (const auto& slot : tpl.slots) {
    const auto it = request.variables.find(slot);
    if (it == request.variables.end()) {
      throw Error(Errc::InvalidArgument, "template " + std::string(to_string(tpl.id)) +
                                             " requires slot '" + slot + "'");
    }
    const auto placeholder = "{{" + slot + "}}";
    for (auto pos = user.find(placeholder); pos != std::string::npos;
         pos = user.find(placeholder, pos + it->second.size())) {
      user.replace(pos, placeholder.size(), it->second);
    }
  }
  return {tpl.system, user};
}

Variables extract_slots(std::string_view user_prompt) {
  Variables out;
  std::size_t pos = 0;
  while ((pos = user_prompt.find('<', pos)) != std::string_view::npos) {
    const auto close = user_prompt.find(">\n", pos);
    if (close == std::string_view::npos) break;
    const auto name = user_prompt.substr(pos + 1, close - pos - 1);
    const bool is_name = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || c == '_';
    });
    if (!is_name) {
      ++pos;
      continue;
    }
    const auto terminator = "\n</" + std::string(name) + ">";
    const auto body_start = close + 2;
    const auto end = user_prompt.find(terminator, body_start);
    if (end == std::string_view::npos) {
      ++pos;
      continue;
    }
    out.emplace(std::string(name), std::string(user_prompt.substr(body_start, end - body_start)));
    pos = end + terminator.size();
  }
  return out;
}

std::string numbered_lines(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n";
    out += "[" + std::to_string(i) + "] " + items[i];
  }
  return out;
}

std::string numbered_lines(const std::vector<std::pair<std::size_t, std::string>>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n";
    out += "[" + std::to_string(items[i].first) + "] " + items[i].second;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::string>> parse_numbered_lines(std::string_view block) {
  std::vector<std::pair<std::size_t, std::string>> out;
  for (const auto& line : text::split(block, '\n')) {
    const auto close = line.find("] ");
    if (line.size() < 4 || line[0] != '[' || close == std::string::npos || close == 1 || close > 10) {
      continue;
    }
    const auto digits = line.substr(1, close - 1);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    out.emplace_back(std::stoul(digits), line.substr(close + 2));
  }
  return out;
}

// ---------------------------------------------------------------------------

ChatCompletionProvider::ChatCompletionProvider(http::Transport& transport, std::string endpoint,
                                               std::string model, std::string api_key)
    : transport_(transport),
      endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)) {}

json ChatCompletionProvider::request_body(const ProviderCall& call, std::string_view model) {
  return {{"model", model},
          {"messages",
           json::array({{{"role", "system"}, {"content", call.prompt.system}},
                        {{"role", "user"}, {"content", call.prompt.user}}})},
          {"temperature", call.request.temperature},
          {"max_tokens", call.request.max_output_tokens}};
}

std::string ChatCompletionProvider::complete(const ProviderCall& call) {
  http::Request req;
  req.method = "POST";
  req.url = endpoint_;
  req.headers = {{"Content-Type", "application/json"}, {"Accept", "application/json"}};
  if (!api_key_.empty()) req.headers.emplace_back("Authorization", "Bearer " + api_key_);
  req.body = request_body(call, model_).dump();
  req.timeout = std::chrono::seconds(120);

  http::Response res;
  try {
    res = http::fetch(transport_, req);
  } catch (const Error& e) {
    if (e.code() == Errc::NetworkError) throw Error(Errc::ProviderUnreachable, e.what());
    throw;
  }
  if (!res.ok()) {
    throw Error(Errc::ProviderUnreachable,
                "LLM endpoint " + endpoint_ + " returned HTTP " + std::to_string(res.status));
  }
  try {
    const auto doc = json::parse(res.body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::ProviderUnreachable, std::string("malformed completion body: ") + e.what());
  }
}

bool ChatCompletionProvider::healthy() {
  try {
    http::Request req;
    req.url = http::Url::parse(endpoint_).origin() + "/";
    req.timeout = std::chrono::seconds(5);
    transport_.send(req);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// ---------------------------------------------------------------------------

MockProvider::MockProvider(MockOptions options) : options_(std::move(options)) {}

std::string MockProvider::fixture_name(const LlmRequest& request) {
  const json canonical(request.variables);  // std::map: keys sorted
  return text::lower_ascii(to_string(request.template_id)) + "-" +
         text::sha256_hex(canonical.dump()).substr(0, 16);
}

void MockProvider::script(TemplateId id, std::vector<std::string> responses) {
  std::lock_guard lock(mutex_);
  auto& queue = scripted_[id];
  for (auto& r : responses) queue.push_back(std::move(r));
}

namespace {

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string MockProvider::complete(const ProviderCall& call) {
  {
    std::lock_guard lock(mutex_);
    auto it = scripted_.find(call.request.template_id);
    if (it != scripted_.end() && !it->second.empty()) {
      auto next = std::move(it->second.front());
      it->second.pop_front();
      return next;
    }
  }
  const auto name = fixture_name(call.request);
  if (!options_.fixtures_dir.empty()) {
    const auto per_attempt =
        options_.fixtures_dir / (name + ".attempt" + std::to_string(call.attempt) + ".txt");
    if (auto text = read_file(per_attempt)) return *text;
    if (auto text = read_file(options_.fixtures_dir / (name + ".txt"))) return *text;
  }
  switch (options_.fallback) {
    case MockOptions::Fallback::Heuristic:
      return HeuristicResponder::respond(call.request.template_id, call.request.variables);
    case MockOptions::Fallback::StaticDirectory: {
      const auto file = options_.static_dir /
                        (text::lower_ascii(to_string(call.request.template_id)) + ".txt");
      if (auto text = read_file(file)) return *text;
      break;
    }
    case MockOptions::Fallback::None:
      break;
  }
  throw Error(Errc::ProviderUnreachable, "mock provider has no fixture '" + name + "'");
}

// ---------------------------------------------------------------------------

std::optional<json> extract_json(std::string_view text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  try {
    auto doc = json::parse(text.substr(open, close - open + 1));
    if (!doc.is_object()) return std::nullopt;
    return doc;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

namespace {

bool is_repo_name(const std::string& s, bool allow_none) {
  const auto v = text::lower_ascii(text::trim(s));
  return v == "arxiv" || v == "biorxiv" || v == "medrxiv" || (allow_none && v == "none");
}

std::optional<Violation> check_string_list(const json& v, const char* what) {
  if (!v.is_array()) return Violation{Errc::SchemaViolation, std::string(what) + " must be a list"};
  for (const auto& item : v) {
    if (!item.is_string()) {
      return Violation{Errc::SchemaViolation, std::string(what) + " must contain strings"};
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Violation> validate_schema(std::string_view schema_id, const json& v) {
  if (!v.is_object()) return Violation{Errc::SchemaViolation, "expected a JSON object"};
  if (schema_id == "routing") {
    for (const char* field : {"primary_repo", "secondary_repo", "reasoning"}) {
      if (!v.contains(field) || !v[field].is_string()) {
        return Violation{Errc::SchemaViolation, std::string("missing string field ") + field};
      }
    }
    if (!v.contains("confidence") || !v["confidence"].is_number()) {
      return Violation{Errc::SchemaViolation, "missing numeric field confidence"};
    }
    const double c = v["confidence"].get<double>();
    if (c < 0.0 || c > 1.0) return Violation{Errc::SchemaViolation, "confidence outside [0,1]"};
    if (!is_repo_name(v["primary_repo"], false)) {
      return Violation{Errc::InvalidRepoName,
                       "unknown primary_repo '" + v["primary_repo"].get<std::string>() + "'"};
    }
    if (!is_repo_name(v["secondary_repo"], true)) {
      return Violation{Errc::InvalidRepoName,
                       "unknown secondary_repo '" + v["secondary_repo"].get<std::string>() + "'"};
    }
    return std::nullopt;
  }
  if (schema_id == "keywords") {
    if (!v.contains("claims") || !v["claims"].is_array()) {
      return Violation{Errc::SchemaViolation, "missing list field claims"};
    }
    for (const auto& item : v["claims"]) {
      if (!item.is_object()) return Violation{Errc::SchemaViolation, "claims items must be objects"};
      for (const char* field : {"technical_terms", "concepts"}) {
        if (!item.contains(field)) {
          return Violation{Errc::SchemaViolation, std::string("claims item lacks ") + field};
        }
        if (auto bad = check_string_list(item[field], field)) return bad;
      }
    }
    return std::nullopt;
  }
  if (schema_id == "match_score") {
    if (!v.contains("scores") || !v["scores"].is_array() || v["scores"].empty()) {
      return Violation{Errc::SchemaViolation, "missing non-empty list field scores"};
    }
    for (const auto& item : v["scores"]) {
      if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer() ||
          item["index"].get<long long>() < 0 || !item.contains("score") ||
          !item["score"].is_number() || !item.contains("rationale") ||
          !item["rationale"].is_string() || text::trim(item["rationale"].get<std::string>()).empty()) {
        return Violation{Errc::SchemaViolation,
                         "scores items need integer index, numeric score, non-empty rationale"};
      }
    }
    return std::nullopt;
  }
  return Violation{Errc::SchemaViolation, "unknown schema '" + std::string(schema_id) + "'"};
}

// ---------------------------------------------------------------------------

Gateway::Gateway(Provider& provider, int max_in_flight)
    : provider_(provider), limiter_(std::max(1, std::min(max_in_flight, 64))) {}

std::string Gateway::call_provider(const ProviderCall& call) {
  ++provider_requests_;
  limiter_.acquire();
  try {
    auto out = provider_.complete(call);
    limiter_.release();
    return out;
  } catch (...) {
    limiter_.release();
    throw;
  }
}

LlmStructuredResponse Gateway::complete_structured(const LlmRequest& request,
                                                   std::string_view schema_id,
                                                   const Validator& extra) {
  ++calls_;
  const auto base = render(request);
  LlmStructuredResponse out;
  Violation last;
  for (int attempt = 1; attempt <= kMaxStructuredAttempts; ++attempt) {
    ProviderCall call{request, base, attempt};
    if (attempt > 1) {
      call.prompt.user += "\n\nYour previous reply was rejected: " + last.message +
                          ". Reply again with only one JSON object that matches the required "
                          "format.";
    }
    out.raw_text = call_provider(call);
    out.attempts = attempt;
    if (text::trim(out.raw_text).empty()) {
      throw Error(Errc::ProviderRefusal, "empty completion for " + std::string(to_string(request.template_id)));
    }
    auto parsed = extract_json(out.raw_text);
    if (!parsed) {
      last = {Errc::SchemaViolation, "reply is not a JSON object"};
    } else if (auto bad = validate_schema(schema_id, *parsed)) {
      last = *bad;
    } else if (auto bad_extra = extra ? extra(*parsed) : std::nullopt) {
      last = *bad_extra;
    } else {
      out.parsed = std::move(parsed);
      return out;
    }
    spdlog::debug("llm {} attempt {} rejected: {}", to_string(request.template_id), attempt,
                  last.message);
  }
  throw Error(last.code, "after " + std::to_string(kMaxStructuredAttempts) +
                             " attempts: " + last.message);
}

std::string Gateway::complete_text(const LlmRequest& request) {
  ++calls_;
  ProviderCall call{request, render(request), 1};
  auto out = call_provider(call);
  if (text::trim(out).empty()) {
    throw Error(Errc::ProviderRefusal, "empty completion for " + std::string(to_string(request.template_id)));
  }
  return out;
}

}  // namespace refweave::llm
