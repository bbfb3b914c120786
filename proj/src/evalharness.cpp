#include "refweave/evalharness.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "refweave/error.hpp"
#include "refweave/text.hpp"

namespace refweave::eval {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::System: return "SYSTEM";
    case Method::BaselineA: return "BASELINE_A";
    case Method::BaselineB: return "BASELINE_B";
  }
  return "SYSTEM";
}

std::string_view to_string(Judge judge) { return judge == Judge::Llm ? "llm" : "human"; }

namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    if (quoted) {
      if (c == '"' && i + 1 < csv.size() && csv[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw Error(Errc::InvalidArgument, "unterminated quote in CSV");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

bool parse_bool(const std::string& raw, std::size_t line) {
  const auto v = text::lower_ascii(text::trim(raw));
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw Error(Errc::InvalidArgument, fmt::format("line {}: expected a boolean, got '{}'", line, raw));
}

Method parse_method(const std::string& raw, std::size_t line) {
  const auto v = text::trim(raw);
  for (auto m : {Method::System, Method::BaselineA, Method::BaselineB}) {
    if (v == to_string(m)) return m;
  }
  throw Error(Errc::InvalidArgument, fmt::format("line {}: unknown method '{}'", line, raw));
}

std::string csv_cell(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<LabeledRun> parse_runs_csv(std::string_view csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty()) throw Error(Errc::InvalidArgument, "empty judgments file");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[text::trim(rows[0][i])] = i;
  for (const char* required : {"sentence_id", "ref_id", "valid", "relevant", "judge"}) {
    if (!col.contains(required)) {
      throw Error(Errc::InvalidArgument, std::string("missing column ") + required);
    }
  }
  const bool has_method = col.contains("method");

  std::vector<LabeledRun> runs;
  std::map<std::pair<std::string, Method>, std::size_t> by_sentence;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto line = r + 1;
    if (row.size() < rows[0].size()) {
      throw Error(Errc::InvalidArgument, fmt::format("line {}: expected {} columns", line, rows[0].size()));
    }
    const auto sid = text::trim(row[col["sentence_id"]]);
    if (sid.empty()) throw Error(Errc::InvalidArgument, fmt::format("line {}: empty sentence_id", line));
    const auto method = has_method ? parse_method(row[col["method"]], line) : Method::System;
    RefJudgment ref;
    ref.ref_id = text::trim(row[col["ref_id"]]);
    ref.valid = parse_bool(row[col["valid"]], line);
    if (const auto rel = text::trim(row[col["relevant"]]); !rel.empty()) {
      ref.relevant = parse_bool(rel, line);
      if (!ref.valid) {
        throw Error(Errc::InvalidArgument,
                    fmt::format("line {}: relevance is only judged for valid references", line));
      }
    }
    const auto judge_raw = text::lower_ascii(text::trim(row[col["judge"]]));
    Judge judge;
    if (judge_raw == "human" || judge_raw == "human_file") {
      judge = Judge::HumanFile;
    } else if (judge_raw == "llm") {
      judge = Judge::Llm;
    } else {
      throw Error(Errc::InvalidArgument, fmt::format("line {}: unknown judge '{}'", line, judge_raw));
    }

    const auto key = std::make_pair(sid, method);
    auto it = by_sentence.find(key);
    if (it == by_sentence.end()) {
      it = by_sentence.emplace(key, runs.size()).first;
      runs.push_back(LabeledRun{sid, method, {}, judge});
    }
    runs[it->second].references.push_back(std::move(ref));
  }
  return runs;
}

std::vector<LabeledRun> load_runs_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_runs_csv(ss.str());
}

std::string runs_to_csv(const std::vector<LabeledRun>& runs) {
  std::string out = "sentence_id,method,ref_id,valid,relevant,judge\n";
  for (const auto& run : runs) {
    for (const auto& ref : run.references) {
      out += csv_cell(run.sentence_id) + "," + std::string(to_string(run.method)) + "," +
             csv_cell(ref.ref_id) + "," + (ref.valid ? "1" : "0") + "," +
             (ref.relevant ? (*ref.relevant ? "1" : "0") : "") + "," +
             std::string(to_string(run.judge)) + "\n";
    }
  }
  return out;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

Metrics compute_metrics(const std::vector<LabeledRun>& runs) {
  if (runs.empty()) throw Error(Errc::InvalidArgument, "no runs");
  Metrics m;
  std::set<std::string> sentences;
  std::set<std::string> usable;
  for (const auto& run : runs) {
    sentences.insert(run.sentence_id);
    for (const auto& ref : run.references) {
      ++m.references;
      if (!ref.valid) continue;
      ++m.valid;
      if (!ref.relevant) continue;
      ++m.judged;
      if (*ref.relevant) {
        ++m.relevant;
        usable.insert(run.sentence_id);
      }
    }
  }
  m.sentences = sentences.size();
  m.usable_sentences = usable.size();
  m.validity_pct = m.references ? round1(100.0 * m.valid / m.references) : 0.0;
  if (m.judged) m.precision_pct = round1(100.0 * m.relevant / m.judged);
  m.usability_pct = round1(100.0 * m.usable_sentences / m.sentences);
  return m;
}

Metrics compute_metrics_with_precision(const std::vector<LabeledRun>& runs) {
  auto m = compute_metrics(runs);
  if (!m.precision_pct) throw Error(Errc::NoJudgments, "no judged references");
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  return {{"sentences", m.sentences},
          {"references", m.references},
          {"valid", m.valid},
          {"judged", m.judged},
          {"relevant", m.relevant},
          {"usable_sentences", m.usable_sentences},
          {"validity_pct", m.validity_pct},
          {"precision_pct", m.precision_pct ? nlohmann::json(*m.precision_pct) : nlohmann::json(nullptr)},
          {"usability_pct", m.usability_pct}};
}

std::string format_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}\n", "Method", width, "Validity",
                                "Precision", "Usability");
  for (const auto& [name, m] : rows) {
    out += fmt::format("{:<{}}  {:>9.1f}  {:>9}  {:>9.1f}\n", name, width, m.validity_pct,
                       m.precision_pct ? fmt::format("{:.1f}", *m.precision_pct) : std::string("n/a"),
                       m.usability_pct);
  }
  return out;
}

std::vector<QueryRow> compare_queries(const std::vector<Claim>& claims, const DocumentSchema& schema,
                                      std::string_view surrounding, llm::Gateway& gateway) {
  if (claims.empty()) throw Error(Errc::InvalidArgument, "no claims");
  std::vector<QueryRow> rows;
  for (auto variant : {QueryVariant::RawSentence, QueryVariant::KeywordsOnly, QueryVariant::ContextAware}) {
    for (const auto& q : build_queries(claims, schema, surrounding, variant, gateway)) {
      rows.push_back({variant, q.claim_index, q.query_string});
    }
  }
  return rows;
}

std::string format_query_table(const std::vector<QueryRow>& rows) {
  std::string out = fmt::format("{:<14}  {:>5}  {}\n", "Variant", "Claim", "Query");
  for (const auto& r : rows) {
    out += fmt::format("{:<14}  {:>5}  {}\n", to_string(r.variant), r.claim_index, r.query_string);
  }
  return out;
}

std::vector<LabeledRun> judge_with_llm(const std::vector<LabeledRun>& runs,
                                       const std::map<std::string, std::string>& claims,
                                       const std::map<std::string, std::string>& references,
                                       llm::Gateway& gateway, double threshold) {
  std::vector<LabeledRun> out = runs;
  for (auto& run : out) {
    run.judge = Judge::Llm;
    const auto claim = claims.find(run.sentence_id);
    if (claim == claims.end()) {
      throw Error(Errc::InvalidArgument, "no claim text for sentence " + run.sentence_id);
    }
    std::vector<std::pair<std::size_t, std::string>> items;
    for (std::size_t i = 0; i < run.references.size(); ++i) {
      auto& ref = run.references[i];
      ref.relevant.reset();
      if (!ref.valid) continue;
      const auto text = references.find(ref.ref_id);
      if (text == references.end()) {
        throw Error(Errc::InvalidArgument, "no text for reference " + ref.ref_id);
      }
      items.emplace_back(i, text::collapse_whitespace(text->second));
    }
    if (items.empty()) continue;
    auto request = llm::LlmRequest::make(
        llm::TemplateId::MatchScore,
        {{"claim", claim->second}, {"surrounding", ""}, {"paragraphs", llm::numbered_lines(items)}}, 1024);
    const auto response = gateway.complete_structured(request, "match_score");
    for (const auto& item : (*response.parsed)["scores"]) {
      const auto idx = item["index"].get<std::size_t>();
      if (idx < run.references.size() && run.references[idx].valid) {
        run.references[idx].relevant = item["score"].get<double>() >= threshold;
      }
    }
    // A reference the judge skipped counts as not relevant.
    for (auto& ref : run.references) {
      if (ref.valid && !ref.relevant) ref.relevant = false;
    }
  }
  return out;
}

}  // namespace refweave::eval
