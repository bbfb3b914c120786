#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "refweave/http.hpp"
#include "refweave/routing.hpp"

namespace refweave::testing {

struct CatalogPaper {
  Repo repo = Repo::Arxiv;
  std::string id;  // arXiv id with version, or DOI
  std::string title;
  std::vector<std::string> authors;
  std::string abstract;
  std::string published;
  std::string category;
  std::vector<std::string> facts;
  std::string pdf = "ok";  // ok | html | missing
  std::string bib = "ok";  // ok | missing
};

std::vector<CatalogPaper> load_catalog(const std::filesystem::path& file);

/// Offline stand-in for export.arxiv.org, api.crossref.org, doi.org, the
/// PDF hosts and a GROBID server, all generated from a paper catalog.
class CatalogUpstream : public http::Transport {
 public:
  explicit CatalogUpstream(std::vector<CatalogPaper> papers, std::string grobid_host = "localhost");

  http::Response send(const http::Request& request) override;

  const std::vector<CatalogPaper>& papers() const { return papers_; }
  const CatalogPaper* find(std::string_view id) const;

  /// Every request to `host` answers with `status`; 0 simulates a refused
  /// connection.
  void fail_host(const std::string& host, int status);
  void clear_failures();
  std::size_t request_count() const { return requests_.load(); }

  static std::string atom_feed(const std::vector<const CatalogPaper*>& papers, std::string_view query);
  static std::string crossref_works(const std::vector<const CatalogPaper*>& papers);
  static std::string crossref_bibtex(const CatalogPaper& paper);
  static std::string pdf_bytes(const CatalogPaper& paper);
  static std::string tei(const CatalogPaper& paper);
  /// Body paragraphs exactly as placed in the TEI, in reading order.
  static std::vector<std::string> body_paragraphs(const CatalogPaper& paper);

 private:
  std::vector<const CatalogPaper*> search(std::string_view query, std::optional<Repo> only_arxiv,
                                          std::size_t limit) const;

  std::vector<CatalogPaper> papers_;
  std::string grobid_host_;
  mutable std::mutex mutex_;
  std::map<std::string, int> failures_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace refweave::testing
