#include "refweave/manuscript.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "refweave/bibtex.hpp"
#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Reads a balanced {...} group starting at `pos` (which must point at '{').
// Returns the inner text and advances `pos` past the closing brace.
std::string read_group(std::string_view s, std::size_t& pos) {
  if (pos >= s.size() || s[pos] != '{') return {};
  int depth = 0;
  const auto begin = pos;
  for (; pos < s.size(); ++pos) {
    if (s[pos] == '\\') {
      ++pos;
      continue;
    }
    if (s[pos] == '{') ++depth;
    if (s[pos] == '}' && --depth == 0) {
      ++pos;
      return std::string(s.substr(begin + 1, pos - begin - 2));
    }
  }
  return std::string(s.substr(begin + 1));
}

void skip_optional_arg(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && text::is_space(s[pos])) ++pos;
  if (pos < s.size() && s[pos] == '[') {
    const auto close = s.find(']', pos);
    pos = close == std::string_view::npos ? s.size() : close + 1;
  }
  while (pos < s.size() && text::is_space(s[pos])) ++pos;
}

std::string bijective_suffix(std::size_t n) {
  std::string s;
  ++n;
  while (n > 0) {
    --n;
    s.insert(s.begin(), static_cast<char>('a' + n % 26));
    n /= 26;
  }
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '+' ||
           c == '-';
  });
}

}  // namespace

std::string strip_comments(std::string_view tex) {
  std::string out;
  out.reserve(tex.size());
  for (std::size_t i = 0; i < tex.size(); ++i) {
    if (tex[i] == '\\' && i + 1 < tex.size()) {
      out.push_back(tex[i]);
      out.push_back(tex[++i]);
      continue;
    }
    if (tex[i] == '%') {
      while (i < tex.size() && tex[i] != '\n') ++i;
      if (i < tex.size()) out.push_back('\n');
      continue;
    }
    out.push_back(tex[i]);
  }
  return out;
}

std::string latex_to_plain(std::string_view s) {
  static const std::set<std::string, std::less<>> kDropWithArgs = {
      "thanks", "footnote", "label", "cite", "citep", "citet", "ref", "eqref", "vspace",
      "hspace", "authornote", "includegraphics", "url"};
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (c == '\\') {
      if (i + 1 < s.size() && !is_letter(s[i + 1])) {
        // \\ is a line break; other escapes (\%, \&) keep the character.
        out.push_back(s[i + 1] == '\\' ? ' ' : s[i + 1]);
        i += 2;
        continue;
      }
      auto j = i + 1;
      while (j < s.size() && is_letter(s[j])) ++j;
      const auto name = s.substr(i + 1, j - i - 1);
      i = j;
      if (kDropWithArgs.contains(name)) {
        skip_optional_arg(s, i);
        while (i < s.size() && s[i] == '{') read_group(s, i);
      }
      continue;
    }
    if (c == '{' || c == '}') {
      ++i;
      continue;
    }
    out.push_back(c == '~' ? ' ' : c);
    ++i;
  }
  return text::collapse_whitespace(out);
}

DocumentSchema extract_schema(std::string_view tex_source) {
  const auto src = strip_comments(tex_source);
  const bool has_title = src.find("\\title") != std::string::npos;
  const bool has_section = src.find("\\section") != std::string::npos;
  const bool has_document = src.find("\\begin{document}") != std::string::npos;
  if (!has_title && !has_section && !has_document) {
    throw Error(Errc::MalformedLatex, "no \\title, \\section or \\begin{document} found");
  }

  DocumentSchema schema;
  std::string_view view(src);
  for (std::size_t i = 0; i < view.size(); ++i) {
    if (view[i] != '\\') continue;
    auto j = i + 1;
    while (j < view.size() && is_letter(view[j])) ++j;
    const auto name = view.substr(i + 1, j - i - 1);
    if (name != "title" && name != "section" && name != "subsection") continue;
    auto pos = j;
    if (pos < view.size() && view[pos] == '*') ++pos;
    skip_optional_arg(view, pos);
    if (pos >= view.size() || view[pos] != '{') continue;
    auto value = latex_to_plain(read_group(view, pos));
    if (name == "title") {
      if (schema.title.empty()) schema.title = std::move(value);
    } else {
      schema.section_headings.push_back(std::move(value));
    }
    i = pos - 1;
  }

  if (schema.title.empty()) {
    for (const auto& line : text::split(src, '\n')) {
      const auto trimmed = text::trim(line);
      if (trimmed.empty()) continue;
      const auto plain = latex_to_plain(trimmed);
      schema.title = plain.empty() ? trimmed : plain;
      break;
    }
  }

  const auto abs_begin = src.find("\\begin{abstract}");
  if (abs_begin != std::string::npos) {
    const auto body_begin = abs_begin + std::string_view("\\begin{abstract}").size();
    const auto abs_end = src.find("\\end{abstract}", body_begin);
    schema.abstract = latex_to_plain(std::string_view(src).substr(
        body_begin, abs_end == std::string::npos ? std::string::npos : abs_end - body_begin));
  }

  std::string summary = "Title: " + schema.title;
  if (!schema.abstract.empty()) summary += "\nAbstract: " + schema.abstract;
  if (!schema.section_headings.empty()) {
    summary += "\nSections: " + text::join(schema.section_headings, "; ");
  }
  schema.summary = text::truncate_cp(summary, kSummaryMaxChars);
  return schema;
}

Manuscript load_manuscript(std::string tex_source, std::string bib_source, std::string bib_path) {
  if (tex_source.empty()) throw Error(Errc::MalformedLatex, "empty manuscript");
  Manuscript m;
  m.schema = extract_schema(tex_source);
  bibtex::parse(bib_source);
  m.tex_source = std::move(tex_source);
  m.bib_source = std::move(bib_source);
  m.bib_path = std::move(bib_path);
  return m;
}

Selection make_selection(const Manuscript& manuscript, std::size_t start_offset,
                         std::size_t end_offset) {
  const auto& tex = manuscript.tex_source;
  const auto length = text::codepoint_length(tex);
  if (!(start_offset < end_offset && end_offset <= length)) {
    throw Error(Errc::InvalidSelection, "require 0 <= start < end <= " + std::to_string(length));
  }
  Selection sel;
  sel.start_offset = start_offset;
  sel.end_offset = end_offset;
  const auto b = text::byte_offset(tex, start_offset);
  const auto e = text::byte_offset(tex, end_offset);
  sel.text = tex.substr(b, e - b);

  // Paragraphs are maximal runs of non-blank lines.
  std::size_t para_begin = 0;
  std::size_t para_end = tex.size();
  bool begin_found = false;
  std::size_t run_start = std::string::npos;
  for (std::size_t line_start = 0; line_start <= tex.size();) {
    auto nl = tex.find('\n', line_start);
    const auto line_end = nl == std::string::npos ? tex.size() : nl;
    const bool blank = text::trim(std::string_view(tex).substr(line_start, line_end - line_start)).empty();
    if (!blank && run_start == std::string::npos) run_start = line_start;
    if (blank && run_start != std::string::npos) {
      // run [run_start, line_start) just closed
      if (!begin_found && line_start > b) {
        para_begin = run_start;
        begin_found = true;
      }
      if (begin_found && line_start >= e) {
        para_end = line_start;
        break;
      }
      run_start = std::string::npos;
    }
    if (nl == std::string::npos) {
      if (!begin_found && run_start != std::string::npos) para_begin = run_start;
      break;
    }
    line_start = nl + 1;
  }
  sel.surrounding_paragraph =
      text::collapse_whitespace(std::string_view(tex).substr(para_begin, para_end - para_begin));
  return sel;
}

Selection select_text(const Manuscript& manuscript, std::string_view needle) {
  const auto pos = manuscript.tex_source.find(needle);
  if (needle.empty() || pos == std::string::npos) {
    throw Error(Errc::InvalidSelection, "text not found in manuscript");
  }
  const auto start = text::codepoint_offset(manuscript.tex_source, pos);
  return make_selection(manuscript, start, start + text::codepoint_length(needle));
}

std::vector<Claim> segment_text(std::string_view raw, const SegmenterOptions& options) {
  const auto s = text::collapse_whitespace(raw);
  if (s.empty()) throw Error(Errc::EmptySelection, "selection is empty after normalization");

  auto protected_abbreviation = [&](std::size_t period) {
    for (const auto& abbr : options.abbreviations) {
      if (abbr.size() > period + 1) continue;
      const auto begin = period + 1 - abbr.size();
      if (std::string_view(s).substr(begin, abbr.size()) != abbr) continue;
      if (begin == 0 || s[begin - 1] == ' ' || s[begin - 1] == '(') return true;
    }
    // Single-letter initials ("J. Smith").
    if (period >= 1 && std::isupper(static_cast<unsigned char>(s[period - 1])) &&
        (period == 1 || s[period - 2] == ' ')) {
      return true;
    }
    return false;
  };

  std::vector<Claim> claims;
  std::size_t sentence_start = 0;
  bool in_math = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c == '$') {
      in_math = !in_math;
      continue;
    }
    if (in_math || (c != '.' && c != '?' && c != '!')) continue;
    auto j = i + 1;
    while (j < s.size() && (s[j] == ')' || s[j] == '"' || s[j] == '\'' || s[j] == ']' || s[j] == '}')) {
      ++j;
    }
    if (j + 1 >= s.size() || s[j] != ' ') continue;
    auto k = j + 1;
    while (k < s.size() && (s[k] == '(' || s[k] == '"' || s[k] == '`' || s[k] == '[')) ++k;
    if (k >= s.size() || !std::isupper(static_cast<unsigned char>(s[k]))) continue;
    if (c == '.' && protected_abbreviation(i)) continue;
    claims.push_back({s.substr(sentence_start, j - sentence_start), claims.size()});
    sentence_start = j + 1;
    i = j;
  }
  if (sentence_start < s.size()) {
    claims.push_back({s.substr(sentence_start), claims.size()});
  }
  return claims;
}

std::vector<Claim> segment_sentences(const Selection& selection, const SegmenterOptions& options) {
  return segment_text(selection.text, options);
}

std::vector<std::string> cite_keys(std::string_view tex) {
  static const std::regex kCite(R"(\\cite[pt]?\*?\s*(?:\[[^\]]*\]\s*){0,2}\{([^}]*)\})");
  std::vector<std::string> keys;
  const std::string src(tex);
  for (std::sregex_iterator it(src.begin(), src.end(), kCite), end; it != end; ++it) {
    for (const auto& k : text::split((*it)[1].str(), ',')) {
      auto key = text::trim(k);
      if (!key.empty()) keys.push_back(std::move(key));
    }
  }
  return keys;
}

CitationInsertion insert_citation(const Manuscript& manuscript, const Selection& selection,
                                  std::string_view cite_key, std::string_view bibtex) {
  if (manuscript.tex_source.empty()) throw Error(Errc::InvalidArgument, "manuscript is empty");
  if (!valid_key(cite_key)) {
    throw Error(Errc::InvalidArgument, "cite key '" + std::string(cite_key) + "' is not valid");
  }
  const auto entry = bibtex::parse_single(bibtex);
  if (entry.key != cite_key) {
    throw Error(Errc::KeyBibMismatch,
                "entry key '" + entry.key + "' differs from '" + std::string(cite_key) + "'");
  }
  const auto length = text::codepoint_length(manuscript.tex_source);
  if (selection.end_offset > length || selection.start_offset >= selection.end_offset ||
      text::substr_cp(manuscript.tex_source, selection.start_offset, selection.end_offset) !=
          selection.text) {
    throw Error(Errc::InvalidSelection, "selection does not match the manuscript revision");
  }

  const auto existing = bibtex::parse(manuscript.bib_source);
  std::string key(cite_key);
  std::string new_raw = entry.raw;
  bool append = true;
  for (std::size_t n = 0;; ++n) {
    const auto it = std::find_if(existing.begin(), existing.end(),
                                 [&](const bibtex::Entry& e) { return e.key == key; });
    if (it == existing.end()) break;
    if (text::trim(it->raw) == text::trim(new_raw)) {
      append = false;
      break;
    }
    key = std::string(cite_key) + "-" + bijective_suffix(n);
    new_raw = bibtex::rekey(entry.raw, key);
  }

  CitationInsertion out;
  out.manuscript = manuscript;
  out.cite_key = key;
  out.bib_appended = append;

  // Insertion point: end of span, stepping back over trailing whitespace and
  // at most one trailing sentence punctuation mark.
  const auto& tex = manuscript.tex_source;
  const auto start_byte = text::byte_offset(tex, selection.start_offset);
  auto pos = text::byte_offset(tex, selection.end_offset);
  while (pos > start_byte + 1 && text::is_space(tex[pos - 1])) --pos;
  if (pos > start_byte + 1 && (tex[pos - 1] == '.' || tex[pos - 1] == ',' || tex[pos - 1] == ';')) {
    --pos;
  }
  out.manuscript.tex_source.insert(pos, "~\\cite{" + key + "}");

  if (append) {
    auto& bib = out.manuscript.bib_source;
    if (!bib.empty()) {
      while (!bib.empty() && text::is_space(bib.back())) bib.pop_back();
      bib += "\n\n";
    }
    bib += new_raw;
    bib += "\n";
  }
  try {
    out.manuscript.schema = extract_schema(out.manuscript.tex_source);
  } catch (const Error&) {
    // Keep the previous schema; insertion never removes structure.
  }
  out.manuscript.revision = manuscript.revision + 1;
  return out;
}

}  // namespace refweave
