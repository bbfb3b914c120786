#include "refweave/bibtex.hpp"

#include <cctype>

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave::bibtex {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::vector<Entry> run() {
    std::vector<Entry> entries;
    while (true) {
      const auto at = src_.find('@', pos_);
      if (at == std::string_view::npos) break;
      pos_ = at + 1;
      const auto type = text::lower_ascii(identifier());
      if (type.empty()) fail("expected entry type after '@'");
      skip_ws();
      if (eof() || (peek() != '{' && peek() != '(')) fail("expected '{' after @" + type);
      const char close = peek() == '{' ? '}' : ')';
      if (type == "comment" || type == "preamble" || type == "string") {
        skip_balanced(peek(), close);
        continue;
      }
      ++pos_;
      entries.push_back(entry(type, at, close));
    }
    return entries;
  }

 private:
  Entry entry(const std::string& type, std::size_t start, char close) {
    Entry e;
    e.type = type;
    skip_ws();
    const auto key_start = pos_;
    while (!eof() && peek() != ',' && peek() != close && !text::is_space(peek())) ++pos_;
    e.key = std::string(src_.substr(key_start, pos_ - key_start));
    if (e.key.empty()) fail("entry without key");
    skip_ws();
    while (true) {
      if (eof()) fail("unterminated entry '" + e.key + "'");
      if (peek() == close) {
        ++pos_;
        break;
      }
      if (peek() != ',') fail("expected ',' in entry '" + e.key + "'");
      ++pos_;
      skip_ws();
      if (!eof() && peek() == close) {
        ++pos_;
        break;
      }
      Field f;
      f.name = text::lower_ascii(identifier());
      if (f.name.empty()) fail("expected field name in entry '" + e.key + "'");
      skip_ws();
      if (eof() || peek() != '=') fail("expected '=' after field '" + f.name + "'");
      ++pos_;
      f.value = value();
      e.fields.push_back(std::move(f));
      skip_ws();
    }
    e.raw = std::string(src_.substr(start, pos_ - start));
    return e;
  }

  std::string value() {
    std::string out;
    while (true) {
      skip_ws();
      if (eof()) fail("unterminated field value");
      const char c = peek();
      if (c == '{') {
        const auto begin = pos_;
        skip_balanced('{', '}');
        out += src_.substr(begin + 1, pos_ - begin - 2);
      } else if (c == '"') {
        ++pos_;
        const auto begin = pos_;
        int depth = 0;
        while (!eof() && !(peek() == '"' && depth == 0)) {
          if (peek() == '{') ++depth;
          if (peek() == '}') --depth;
          ++pos_;
        }
        if (eof()) fail("unterminated quoted value");
        out += src_.substr(begin, pos_ - begin);
        ++pos_;
      } else {
        const auto word = identifier();
        if (word.empty()) fail("expected field value");
        out += word;
      }
      skip_ws();
      if (!eof() && peek() == '#') {
        ++pos_;
        continue;
      }
      return out;
    }
  }

  void skip_balanced(char open, char close) {
    int depth = 0;
    while (!eof()) {
      const char c = src_[pos_++];
      if (c == '\\' && !eof()) {
        ++pos_;
        continue;
      }
      if (c == open) ++depth;
      if (c == close && --depth == 0) return;
    }
    fail("unbalanced delimiters");
  }

  std::string identifier() {
    const auto begin = pos_;
    while (!eof()) {
      const auto c = static_cast<unsigned char>(peek());
      if (std::isalnum(c) || c == '_' || c == '-' || c == ':' || c == '.' || c == '+' || c == '/') {
        ++pos_;
      } else {
        break;
      }
    }
    return std::string(src_.substr(begin, pos_ - begin));
  }

  void skip_ws() {
    while (!eof() && text::is_space(peek())) ++pos_;
  }
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::BibParseError, what + " (offset " + std::to_string(pos_) + ")");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<std::string> Entry::field(std::string_view name) const {
  const auto wanted = text::lower_ascii(name);
  for (const auto& f : fields) {
    if (f.name == wanted) return f.value;
  }
  return std::nullopt;
}

std::vector<Entry> parse(std::string_view source) { return Parser(source).run(); }

Entry parse_single(std::string_view source) {
  auto entries = parse(source);
  if (entries.size() != 1) {
    throw Error(Errc::BibParseError,
                "expected exactly one entry, found " + std::to_string(entries.size()));
  }
  return std::move(entries.front());
}

std::string rekey(std::string_view raw, std::string_view new_key) {
  const auto open = raw.find_first_of("{(");
  if (open == std::string_view::npos) throw Error(Errc::BibParseError, "no entry body");
  auto key_begin = open + 1;
  while (key_begin < raw.size() && text::is_space(raw[key_begin])) ++key_begin;
  auto key_end = key_begin;
  while (key_end < raw.size() && raw[key_end] != ',' && !text::is_space(raw[key_end])) ++key_end;
  std::string out(raw.substr(0, key_begin));
  out += new_key;
  out += raw.substr(key_end);
  return out;
}

std::string format(std::string_view type, std::string_view key, const std::vector<Field>& fields) {
  std::string out = "@" + std::string(type) + "{" + std::string(key) + ",\n";
  for (const auto& f : fields) {
    out += "  " + f.name + " = {" + f.value + "},\n";
  }
  out += "}";
  return out;
}

}  // namespace refweave::bibtex
