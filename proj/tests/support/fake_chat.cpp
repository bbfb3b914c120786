#include "fake_chat.hpp"

#include <nlohmann/json.hpp>

#include "refweave/llm.hpp"

namespace refweave::testing {

using nlohmann::json;

http::Response FakeChatEndpoint::send(const http::Request& request) {
  ++calls_;
  http::Response r;
  r.headers = {{"Content-Type", "application/json"}};
  if (request.method != "POST") {
    r.status = 200;
    r.body = R"({"object":"list","data":[]})";
    return r;
  }
  const auto body = json::parse(request.body);
  const auto system = body.at("messages").at(0).at("content").get<std::string>();
  const auto user = body.at("messages").at(1).at("content").get<std::string>();
  const auto first_line = system.substr(0, system.find('\n'));
  const auto id = llm::template_from_string(first_line.substr(first_line.find(':') + 2));
  const auto reply = llm::HeuristicResponder::respond(id, llm::extract_slots(user));
  r.status = 200;
  r.body = json{{"id", "chatcmpl-local"},
                {"object", "chat.completion"},
                {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", reply}}}, {"finish_reason", "stop"}}}}}
               .dump();
  return r;
}

}  // namespace refweave::testing
