#include "refweave/verification.hpp"

#include <algorithm>

#include "refweave/error.hpp"
#include "refweave/text.hpp"
#include "refweave/xml.hpp"

namespace refweave {

std::vector<std::string> pdf_candidates(const PaperRecord& record) {
  std::vector<std::string> urls;
  if (record.pdf_url && !record.pdf_url->empty()) urls.push_back(*record.pdf_url);
  std::string canonical;
  if (record.repo == Repo::Arxiv) {
    canonical = "https://arxiv.org/pdf/" + record.native_id;
  } else {
    canonical = "https://www." + std::string(to_string(record.repo)) + ".org/content/" +
                record.native_id + ".full.pdf";
  }
  if (std::find(urls.begin(), urls.end(), canonical) == urls.end()) urls.push_back(canonical);
  return urls;
}

std::string acquire_pdf(const PaperRecord& record, NetContext& net, std::size_t cap_bytes) {
  std::vector<std::string> failures;
  bool saw_non_pdf = false;
  for (const auto& url : pdf_candidates(record)) {
    http::Request req;
    req.url = url;
    req.headers = {{"Accept", "application/pdf"}};
    req.timeout = std::chrono::seconds(60);
    const auto outcome = send_with_retry(net.transport, req, net.retry, net.sleeper);
    if (!outcome.response || !outcome.response->ok()) {
      failures.push_back(url + ": " + outcome.last_error);
      continue;
    }
    const auto& body = outcome.response->body;
    if (body.size() > cap_bytes) {
      failures.push_back(url + ": exceeds size cap");
      continue;
    }
    if (body.rfind("%PDF", 0) != 0) {
      saw_non_pdf = true;
      failures.push_back(url + ": body is not a PDF");
      continue;
    }
    return body;
  }
  if (saw_non_pdf) {
    throw Error(Errc::NotAPdf, record.native_id + ": " + text::join(failures, "; "));
  }
  throw Error(Errc::PdfUnavailable, record.native_id + ": " + text::join(failures, "; "));
}

namespace {

const xml::Element* find_body(const xml::Element& root) {
  const auto* text_el = root.child("text");
  return text_el ? text_el->child("body") : nullptr;
}

void collect_div(const xml::Element& div, ParsedDocument& doc) {
  Section section;
  if (const auto* head = div.child("head")) section.heading = text::collapse_whitespace(head->text());
  for (const auto& child : div.children) {
    if (child.name != "p") continue;
    auto p = text::collapse_whitespace(child.text());
    if (!p.empty()) section.paragraphs.push_back(std::move(p));
  }
  if (!section.heading.empty() || !section.paragraphs.empty()) doc.sections.push_back(std::move(section));
  for (const auto& child : div.children) {
    if (child.name == "div") collect_div(child, doc);
  }
}

}  // namespace

ParsedDocument parse_tei(std::string_view tei, std::string_view record_ref) {
  xml::Element root;
  try {
    root = xml::parse(tei);
  } catch (const xml::ParseError& e) {
    throw Error(Errc::TeiParseError, e.what());
  }
  const auto* body = find_body(root);
  if (root.name != "TEI" || !body) throw Error(Errc::TeiParseError, "missing TEI/text/body");

  ParsedDocument doc;
  doc.record_ref = std::string(record_ref);
  doc.tei_digest = text::sha256_hex(tei);

  // Paragraphs sitting directly in <body> form an untitled leading section.
  Section loose;
  for (const auto& child : body->children) {
    if (child.name == "p") {
      auto p = text::collapse_whitespace(child.text());
      if (!p.empty()) loose.paragraphs.push_back(std::move(p));
    }
  }
  if (!loose.paragraphs.empty()) doc.sections.push_back(std::move(loose));
  for (const auto& child : body->children) {
    if (child.name == "div") collect_div(child, doc);
  }

  for (std::size_t s = 0; s < doc.sections.size(); ++s) {
    for (const auto& p : doc.sections[s].paragraphs) {
      doc.paragraph_index.push_back({doc.paragraph_index.size(), s, p});
    }
  }
  if (doc.paragraph_index.empty()) {
    throw Error(Errc::EmptyDocument, "no body paragraphs in TEI for " + doc.record_ref);
  }
  return doc;
}

std::string tei_body_text(std::string_view tei) {
  const auto root = xml::parse(tei);
  const auto* body = find_body(root);
  return body ? text::collapse_whitespace(body->text()) : std::string();
}

bool verify_parsed_document(const ParsedDocument& doc, std::string_view tei) {
  std::string body;
  try {
    body = tei_body_text(tei);
  } catch (const xml::ParseError&) {
    return false;
  }
  for (std::size_t i = 0; i < doc.paragraph_index.size(); ++i) {
    const auto& p = doc.paragraph_index[i];
    if (p.global_index != i || p.section_ordinal >= doc.sections.size()) return false;
    if (p.text.empty() || body.find(p.text) == std::string::npos) return false;
  }
  return true;
}

GrobidClient::GrobidClient(NetContext net, std::string base_url, std::chrono::seconds timeout)
    : net_(net), base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

ParsedDocument GrobidClient::parse_fulltext(std::string_view pdf, std::string_view record_ref) {
  if (pdf.rfind("%PDF", 0) != 0) throw Error(Errc::NotAPdf, "refusing to upload non-PDF bytes");
  const auto form = http::multipart_file("input", "paper.pdf", "application/pdf", pdf);
  http::Request req;
  req.method = "POST";
  req.url = base_url_ + "/api/processFulltextDocument";
  req.headers = {{"Content-Type", form.content_type}, {"Accept", "application/xml"}};
  req.body = form.body;
  req.timeout = timeout_;
  RetryOutcome outcome;
  try {
    outcome = send_with_retry(net_.transport, req, net_.retry, net_.sleeper);
  } catch (const Error& e) {
    if (e.code() == Errc::EgressDenied) throw;
    throw Error(Errc::GrobidUnavailable, e.what());
  }
  if (!outcome.response || !outcome.response->ok()) {
    throw Error(Errc::GrobidUnavailable, base_url_ + ": " + outcome.last_error);
  }
  const auto& tei = outcome.response->body;
  net_.raw_store.put(tei);
  return parse_tei(tei, record_ref);
}

bool GrobidClient::alive() {
  http::Request req;
  req.url = base_url_ + "/api/isalive";
  req.timeout = std::chrono::seconds(5);
  try {
    return net_.transport.send(req).ok();
  } catch (const Error&) {
    return false;
  }
}

}  // namespace refweave
