#include "refweave/corpus.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "refweave/error.hpp"

namespace refweave {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Corpus load_corpus(const std::filesystem::path& corpus_json) {
  const auto base = corpus_json.parent_path();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(corpus_json));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, corpus_json.string() + ": " + e.what());
  }
  const auto tex_path = base / doc.at("tex").get<std::string>();
  const auto bib_name = doc.at("bib").get<std::string>();
  Corpus c;
  c.manuscript = load_manuscript(read_file(tex_path), read_file(base / bib_name), bib_name);
  for (const auto& claim : doc.at("claims")) {
    c.selections.push_back(select_text(c.manuscript, claim.get<std::string>()));
  }
  return c;
}

std::pair<std::size_t, std::size_t> parse_span(std::string_view span) {
  const auto colon = span.find(':');
  std::size_t start = 0;
  std::size_t end = 0;
  auto parse = [](std::string_view s, std::size_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
  };
  if (colon == std::string_view::npos || !parse(span.substr(0, colon), start) ||
      !parse(span.substr(colon + 1), end)) {
    throw Error(Errc::InvalidArgument, "span must look like <start>:<end>");
  }
  return {start, end};
}

}  // namespace refweave
