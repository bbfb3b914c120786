#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "refweave/config.hpp"
#include "refweave/corpus.hpp"
#include "refweave/error.hpp"
#include "refweave/evalharness.hpp"
#include "refweave/pipeline.hpp"
#include "refweave/serialize.hpp"
#include "refweave/server.hpp"
#include "refweave/service.hpp"

namespace {

using namespace refweave;
using nlohmann::json;

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void print_result(const DiscoveryJob& job) {
  if (job.state == JobState::Failed) {
    fmt::print("discovery failed: {}\n", job.error.value_or("unknown error"));
    return;
  }
  const auto& r = *job.result;
  fmt::print("Claim: {}\n", r.claim.sentence);
  const auto& routing = r.trace.routing;
  fmt::print("Routing: {} (secondary {}, confidence {:.2f})\n", to_string(routing.primary_repo),
             routing.secondary_repo ? to_string(*routing.secondary_repo) : "none", routing.confidence);
  for (const auto& q : r.trace.queries) fmt::print("Query: {}\n", q.query_string);
  if (r.candidates.empty()) fmt::print("\nNo candidates found.\n");
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    std::string authors;
    for (std::size_t a = 0; a < c.record.authors.size() && a < 3; ++a) {
      authors += (a ? ", " : "") + c.record.authors[a];
    }
    if (c.record.authors.size() > 3) authors += " et al.";
    fmt::print("\n[{}] {}{}\n", i + 1, c.record.title, r.top && *r.top == i ? "  (best match)" : "");
    fmt::print("    {} | {} | {}:{}\n", authors, c.record.published.substr(0, 4), to_string(c.record.repo),
               c.record.native_id);
    if (c.record.pdf_url) fmt::print("    PDF: {}\n", *c.record.pdf_url);
    fmt::print("    Cite key: {}\n", c.bibtex.key);
    if (!c.verifiable) {
      fmt::print("    Unverifiable: {}\n", c.status_note);
      continue;
    }
    fmt::print("    Relevance: {:.2f}\n", c.overall_relevance);
    for (const auto& m : c.matches) {
      fmt::print("    #{} ({:.2f}) {}\n", m.paragraph_index, m.score, m.rationale);
    }
    if (!c.explanation.empty()) fmt::print("    Why: {}\n", c.explanation);
  }
}

int run_serve(const Config& config) {
  Engine engine(config);
  Service service(engine);
  ApiServer server(service);
  const int port = server.bind(config.listen_host, config.listen_port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("listening on http://{}:{}", config.listen_host, port);
  server.listen();
  g_server = nullptr;
  return 0;
}

int run_discover(const Config& config, const std::string& tex, const std::string& bib,
                 const std::string& span, bool as_json) {
  Engine engine(config);
  const auto manuscript = load_manuscript(read_file(tex), bib.empty() ? "" : read_file(bib));
  const auto [start, end] = parse_span(span);
  const auto job = discover(engine, manuscript, make_selection(manuscript, start, end));
  if (as_json) {
    fmt::print("{}\n", json(job).dump(2));
  } else {
    print_result(job);
  }
  return job.state == JobState::Done ? 0 : 1;
}

int run_record(Config config, const std::string& corpus_path) {
  config.network_mode = NetworkMode::Record;
  if (config.fixture_store.empty()) throw Error(Errc::ConfigError, "network.fixture_store is not set");
  Engine engine(config);
  const auto corpus = load_corpus(corpus_path);
  int failures = 0;
  for (const auto& selection : corpus.selections) {
    const auto job = discover(engine, corpus.manuscript, selection);
    const auto n = job.result ? job.result->candidates.size() : 0;
    fmt::print("{:<9} {:>2} candidates  {}\n", to_string(job.state), n, selection.text.substr(0, 60));
    failures += job.state == JobState::Done ? 0 : 1;
  }
  fmt::print("fixture store: {} responses in {}\n", engine.fixture_store()->size(),
             config.fixture_store.string());
  return failures ? 1 : 0;
}

int run_metrics(const std::vector<std::string>& files, bool as_json, const std::string& judge_inputs,
                const std::optional<Config>& config) {
  std::vector<std::pair<std::string, eval::Metrics>> rows;
  std::unique_ptr<Engine> engine;
  for (const auto& file : files) {
    auto runs = eval::load_runs_csv(file);
    if (!judge_inputs.empty()) {
      if (!engine) engine = std::make_unique<Engine>(*config);
      const auto inputs = json::parse(read_file(judge_inputs));
      runs = eval::judge_with_llm(runs, inputs.at("claims").get<std::map<std::string, std::string>>(),
                                  inputs.at("references").get<std::map<std::string, std::string>>(),
                                  engine->gateway());
    }
    rows.emplace_back(std::filesystem::path(file).stem().string(), eval::compute_metrics(runs));
  }
  if (as_json) {
    json out = json::object();
    for (const auto& [name, m] : rows) out[name] = eval::to_json(m);
    fmt::print("{}\n", out.dump(2));
  } else {
    fmt::print("{}", eval::format_metrics_table(rows));
  }
  return 0;
}

int run_compare(const Config& config, const std::string& tex, const std::string& span, bool as_json) {
  Engine engine(config);
  const auto manuscript = load_manuscript(read_file(tex), "");
  const auto [start, end] = parse_span(span);
  const auto selection = make_selection(manuscript, start, end);
  const auto rows = eval::compare_queries(segment_sentences(selection), manuscript.schema,
                                          selection.surrounding_paragraph, engine.gateway());
  if (as_json) {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"variant", to_string(r.variant)}, {"claim_index", r.claim_index}, {"query", r.query_string}});
    }
    fmt::print("{}\n", out.dump(2));
  } else {
    fmt::print("{}", eval::format_query_table(rows));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refweave: claim-grounded reference discovery"};
  app.require_subcommand(1);
  std::optional<std::string> config_flag;
  bool verbose = false;
  app.add_option("--config", config_flag, "Config file (default: $REFWEAVE_CONFIG, then ./refweave.json)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");

  auto* disc = app.add_subcommand("discover", "One-shot discovery for a span of a manuscript");
  std::string tex, bib, span;
  bool as_json = false;
  disc->add_option("--tex", tex, "LaTeX source")->required()->check(CLI::ExistingFile);
  disc->add_option("--bib", bib, "BibTeX file")->check(CLI::ExistingFile);
  disc->add_option("--span", span, "Code point span start:end")->required();
  disc->add_flag("--json", as_json, "Print the job as JSON");

  auto* record = app.add_subcommand("record-fixtures", "Run a corpus in record mode");
  std::string corpus = "data/corpus/corpus.json";
  record->add_option("--corpus", corpus, "corpus.json")->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "Evaluation metrics and query comparison");
  std::vector<std::string> runs;
  bool metrics = false, compare = false;
  std::string judge_inputs;
  ev->add_option("--runs", runs, "Judgment CSV files")->check(CLI::ExistingFile);
  ev->add_flag("--metrics", metrics, "Compute validity, precision and usability");
  ev->add_option("--judge", judge_inputs, "Re-judge with the LLM; JSON with claims and references")
      ->check(CLI::ExistingFile);
  ev->add_flag("--compare-queries", compare, "Print the query string of every variant");
  ev->add_option("--tex", tex, "LaTeX source")->check(CLI::ExistingFile);
  ev->add_option("--span", span, "Code point span start:end");
  ev->add_flag("--json", as_json, "Machine-readable output");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  if (serve->parsed()) spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    auto config = [&] { return load_config(resolve_config_path(config_flag)); };
    if (serve->parsed()) return run_serve(config());
    if (disc->parsed()) return run_discover(config(), tex, bib, span, as_json);
    if (record->parsed()) return run_record(config(), corpus);
    if (ev->parsed()) {
      if (compare) {
        if (tex.empty() || span.empty()) throw Error(Errc::InvalidArgument, "--compare-queries needs --tex and --span");
        return run_compare(config(), tex, span, as_json);
      }
      if (!metrics || runs.empty()) throw Error(Errc::InvalidArgument, "eval needs --metrics --runs <csv> or --compare-queries");
      std::optional<Config> cfg;
      if (!judge_inputs.empty()) cfg = config();
      return run_metrics(runs, as_json, judge_inputs, cfg);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
