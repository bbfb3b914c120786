#include "tei_generator.hpp"

#include <random>
#include <utility>

namespace refweave::testing {

namespace {

// (encoded form, decoded form)
const std::vector<std::pair<std::string, std::string>> kTokens = {
    {"model", "model"},
    {"layers", "layers"},
    {"attention", "attention"},
    {"gene", "gene"},
    {"cohort", "cohort"},
    {"results", "results"},
    {"0.5", "0.5"},
    {"[12]", "[12]"},
    {"caf\xC3\xA9", "caf\xC3\xA9"},
    {"\xE6\x97\xA5\xE6\x9C\xAC", "\xE6\x97\xA5\xE6\x9C\xAC"},
    {"x&lt;y", "x<y"},
    {"a&gt;b", "a>b"},
    {"R&amp;D", "R&D"},
    {"&quot;quoted&quot;", "\"quoted\""},
    {"it&apos;s", "it's"},
    {"na&#239;ve", "na\xC3\xAFve"},
    {"&#x2192;", "\xE2\x86\x92"},
};

const std::vector<std::string> kSpaces = {" ", "  ", "\n      ", "\t", " \n"};

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  SyntheticTei build() {
    SyntheticTei out;
    std::string body;
    if (chance(0.3)) {
      const int n = 1 + pick(2);
      std::vector<std::string> loose;
      for (int i = 0; i < n; ++i) body += paragraph(loose);
      if (!loose.empty()) {
        out.headings.push_back("");
        out.paragraphs.insert(out.paragraphs.end(), loose.begin(), loose.end());
      }
    }
    const int divs = 1 + pick(5);
    for (int i = 0; i < divs; ++i) body += div(0, out);
    if (out.paragraphs.empty()) {
      std::vector<std::string> forced;
      std::string p;
      do {
        forced.clear();
        p = paragraph(forced);
      } while (forced.empty());
      body += "<div>" + p + "</div>";
      out.headings.push_back("");
      out.paragraphs.push_back(forced.front());
    }

    out.xml = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
              "<TEI xml:space=\"preserve\" xmlns=\"http://www.tei-c.org/ns/1.0\" "
              "xmlns:xlink=\"http://www.w3.org/1999/xlink\">\n"
              "<teiHeader><fileDesc><titleStmt><title level=\"a\" type=\"main\">Synthetic</title>"
              "</titleStmt></fileDesc><profileDesc><abstract><div><p>Abstract text that is not "
              "part of the body.</p></div></abstract></profileDesc></teiHeader>\n"
              "<text xml:lang=\"en\">\n<body>" +
              body +
              "</body>\n<back><div type=\"acknowledgement\"><div><head>Acknowledgements</head>"
              "<p>We thank the reviewers.</p></div></div></back>\n</text>\n</TEI>\n";
    return out;
  }

 private:
  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  const std::string& space() { return kSpaces[static_cast<std::size_t>(pick(static_cast<int>(kSpaces.size())))]; }

  std::string inline_token(std::string& decoded_out) {
    const auto& [enc, dec] = kTokens[static_cast<std::size_t>(pick(static_cast<int>(kTokens.size())))];
    decoded_out = dec;
    switch (pick(6)) {
      case 0: return "<ref type=\"bibr\" target=\"#b" + std::to_string(pick(30)) + "\">" + enc + "</ref>";
      case 1: return "<hi rend=\"italic\">" + enc + "</hi>";
      case 2: return "<!-- note -->" + enc;
      default: return enc;
    }
  }

  // Appends the decoded paragraph to `expected` unless it is blank.
  std::string paragraph(std::vector<std::string>& expected) {
    if (chance(0.15)) {
      return chance(0.5) ? "<p>" + space() + space() + "</p>"
                         : "<p>" + space() + "<hi rend=\"bold\">" + space() + "</hi></p>";
    }
    const int words = 1 + pick(25);
    std::string xml = "<p>";
    if (chance(0.5)) xml += space();
    std::string decoded;
    for (int i = 0; i < words; ++i) {
      std::string dec;
      if (i) {
        xml += space();
        decoded += " ";
      }
      xml += inline_token(dec);
      decoded += dec;
    }
    if (chance(0.5)) xml += space();
    xml += "</p>";
    expected.push_back(decoded);
    return xml;
  }

  std::string div(int depth, SyntheticTei& out) {
    std::string xml = "<div xmlns=\"http://www.tei-c.org/ns/1.0\">";
    std::string heading;
    if (chance(0.8)) {
      heading = "Section " + std::to_string(pick(100));
      xml += "<head n=\"" + std::to_string(pick(9)) + "\">" + heading + "</head>";
    }
    std::vector<std::string> paragraphs;
    const int n = pick(6);
    for (int i = 0; i < n; ++i) {
      xml += paragraph(paragraphs);
      if (chance(0.2)) {
        xml += "<figure xml:id=\"fig_" + std::to_string(pick(9)) +
               "\"><head>Figure</head><label>1</label><figDesc>Caption text.</figDesc></figure>";
      }
      if (chance(0.1)) xml += "<formula xml:id=\"formula_0\">E = mc^2</formula>";
    }
    if (!heading.empty() || !paragraphs.empty()) {
      out.headings.push_back(heading);
      out.paragraphs.insert(out.paragraphs.end(), paragraphs.begin(), paragraphs.end());
    }
    if (depth < 2 && chance(0.2)) xml += div(depth + 1, out);
    xml += "</div>\n";
    return xml;
  }

  std::mt19937_64 rng_;
};

}  // namespace

SyntheticTei generate_tei(std::uint64_t seed) { return Builder(seed).build(); }

}  // namespace refweave::testing
