#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "refweave/llm.hpp"
#include "refweave/text.hpp"

namespace refweave::llm {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& discipline_lexicon() {
  static const std::map<std::string, std::set<std::string>> kLexicon = {
      {"arxiv",
       {"algorithm", "algorithms", "neural", "network", "networks", "transformer", "transformers",
        "attention", "language", "model", "models", "learning", "graph", "graphs", "quantum",
        "theorem", "optimization", "gradient", "embedding", "embeddings", "retrieval", "benchmark",
        "physics", "particle", "galaxy", "equation", "proof", "matrix", "computation", "llm",
        "llms", "gpu", "robot", "convolutional", "reinforcement", "residual", "generative",
        "adversarial", "hallucination", "hallucinate", "decoding", "pretraining", "pretrained",
        "fine-tuning", "tokens", "sketch", "sketches", "compression", "stochastic", "vision",
        "recurrent", "encoder", "decoder", "inference", "parameters", "dark", "cosmological",
        "entanglement", "qubit", "qubits", "manifold", "topology", "combinatorial", "lattice"}},
      {"biorxiv",
       {"protein", "proteins", "gene", "genes", "genome", "genomic", "cell", "cells", "cellular",
        "crispr", "rna", "dna", "sequencing", "species", "evolution", "evolutionary", "bacteria",
        "bacterial", "microbial", "microbiome", "enzyme", "mouse", "mice", "zebrafish",
        "expression", "transcription", "mutation", "mutations", "organism", "ecology", "plant",
        "plants", "neurons", "synaptic", "folding", "phylogenetic", "editing", "biology",
        "biological", "molecular", "gut", "ribosome", "chromatin"}},
      {"medrxiv",
       {"clinical", "patients", "patient", "trial", "trials", "randomized", "hospital",
        "mortality", "cohort", "covid", "covid-19", "vaccine", "vaccination", "treatment",
        "disease", "epidemiological", "diagnosis", "therapy", "placebo", "outcomes", "incidence",
        "prevalence", "symptoms", "medical", "health", "hospitalization", "statin", "statins",
        "cholesterol", "cardiovascular", "screening", "infection", "sars-cov-2", "dose",
        "adults", "children", "efficacy"}}};
  return kLexicon;
}

std::vector<std::string> raw_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text::to_ascii(s)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  for (auto& w : out) {
    while (!w.empty() && w.front() == '-') w.erase(w.begin());
    while (!w.empty() && w.back() == '-') w.pop_back();
  }
  std::erase_if(out, [](const std::string& w) { return w.empty(); });
  return out;
}

bool is_technical(const std::string& word) {
  const auto lower = text::lower_ascii(word);
  int upper = 0;
  bool digit = false;
  for (char c : word) {
    if (std::isupper(static_cast<unsigned char>(c))) ++upper;
    if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
  }
  if (upper >= 2 || digit || word.find('-') != std::string::npos) return true;
  for (const auto& [repo, words] : discipline_lexicon()) {
    if (words.contains(lower)) return true;
  }
  return false;
}

std::string canonical_term(const std::string& word) {
  int upper = 0;
  for (char c : word) upper += std::isupper(static_cast<unsigned char>(c)) ? 1 : 0;
  return upper >= 2 ? word : text::lower_ascii(word);
}

std::string route(const Variables& v) {
  const auto& lex = discipline_lexicon();
  std::map<std::string, int> score;
  std::set<std::string> cues;
  const auto claims = v.count("claims") ? v.at("claims") : std::string();
  for (const auto& w : raw_words(claims)) {
    const auto lower = text::lower_ascii(w);
    for (const auto& [repo, words] : lex) {
      if (words.contains(lower)) {
        ++score[repo];
        cues.insert(lower);
      }
    }
  }
  std::vector<std::string> order = {"arxiv", "biorxiv", "medrxiv"};
  std::stable_sort(order.begin(), order.end(),
                   [&](const auto& a, const auto& b) { return score[a] > score[b]; });
  const int top = score[order[0]];
  const int second = score[order[1]];
  json out;
  if (top == 0) {
    out = {{"primary_repo", "arxiv"},
           {"secondary_repo", "none"},
           {"confidence", 0.4},
           {"reasoning", "No discipline-specific vocabulary found; defaulting to arxiv."}};
    return out.dump();
  }
  const double confidence =
      second > 0 ? static_cast<double>(top) / (top + second) : std::min(0.95, 0.6 + 0.1 * top);
  out = {{"primary_repo", order[0]},
         {"secondary_repo", second > 0 ? order[1] : "none"},
         {"confidence", std::round(confidence * 100.0) / 100.0},
         {"reasoning", "Lexical cues: " + text::join({cues.begin(), cues.end()}, ", ")}};
  return out.dump();
}

std::string keywords(const Variables& v) {
  const auto sentences = parse_numbered_lines(v.count("sentences") ? v.at("sentences") : "");
  const auto surrounding = v.count("surrounding") ? v.at("surrounding") : std::string();

  // Context terms: frequent content words of the surrounding paragraph.
  std::map<std::string, int> freq;
  for (const auto& t : text::content_tokens(surrounding)) {
    if (t.size() >= 4 && std::none_of(t.begin(), t.end(), ::isdigit)) ++freq[t];
  }
  std::vector<std::pair<std::string, int>> context(freq.begin(), freq.end());
  std::stable_sort(context.begin(), context.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  json claims = json::array();
  for (const auto& [index, sentence] : sentences) {
    std::vector<std::string> tech;
    std::vector<std::string> concepts;
    std::set<std::string> seen;
    for (const auto& w : raw_words(sentence)) {
      const auto lower = text::lower_ascii(w);
      if (seen.contains(lower) || text::is_stopword(lower) || w.size() < 3) continue;
      seen.insert(lower);
      if (is_technical(w)) {
        tech.push_back(canonical_term(w));
      } else if (w.size() >= 4) {
        concepts.push_back(lower);
      }
    }
    int added = 0;
    for (const auto& [term, count] : context) {
      if (added == 1 || count < 2) break;
      if (seen.contains(term)) continue;
      concepts.push_back(term);
      ++added;
    }
    claims.push_back({{"technical_terms", tech}, {"concepts", concepts}});
  }
  return json{{"claims", claims}}.dump();
}

std::string match_score(const Variables& v) {
  const auto claim = v.count("claim") ? v.at("claim") : std::string();
  const auto claim_tokens = text::content_tokens(claim);
  const std::set<std::string> wanted(claim_tokens.begin(), claim_tokens.end());
  json scores = json::array();
  for (const auto& [index, paragraph] :
       parse_numbered_lines(v.count("paragraphs") ? v.at("paragraphs") : "")) {
    const auto tokens = text::content_tokens(paragraph);
    std::set<std::string> shared;
    for (const auto& t : tokens) {
      if (wanted.contains(t)) shared.insert(t);
    }
    const double ratio = wanted.empty() ? 0.0 : static_cast<double>(shared.size()) / wanted.size();
    const double score = std::round(ratio * 100.0) / 100.0;
    const auto rationale =
        shared.empty() ? std::string("No lexical overlap with the claim.")
                       : "Shares key terms with the claim: " +
                             text::join({shared.begin(), shared.end()}, ", ") + ".";
    scores.push_back({{"index", index}, {"score", score}, {"rationale", rationale}});
  }
  return json{{"scores", scores}}.dump();
}

std::string chat(const Variables& v) {
  const auto claim = v.count("claim") ? v.at("claim") : std::string();
  const auto reference = v.count("reference") ? v.at("reference") : std::string();
  const auto message = v.count("message") ? v.at("message") : std::string();
  std::string title;
  for (const auto& line : text::split(reference, '\n')) {
    if (line.rfind("Title: ", 0) == 0) {
      title = line.substr(7);
      break;
    }
  }
  const auto claim_tokens = text::content_tokens(claim);
  const std::set<std::string> wanted(claim_tokens.begin(), claim_tokens.end());
  std::optional<std::size_t> best;
  std::size_t best_overlap = 0;
  std::set<std::string> best_shared;
  for (const auto& [index, paragraph] : parse_numbered_lines(reference)) {
    std::set<std::string> shared;
    for (const auto& t : text::content_tokens(paragraph)) {
      if (wanted.contains(t)) shared.insert(t);
    }
    if (!best || shared.size() > best_overlap) {
      best = index;
      best_overlap = shared.size();
      best_shared = shared;
    }
  }
  std::string reply;
  if (best) {
    reply = "Paragraph #" + std::to_string(*best) + " of \"" + title + "\" is the closest match";
    reply += best_shared.empty()
                 ? "."
                 : ": it discusses " + text::join({best_shared.begin(), best_shared.end()}, ", ") + ".";
  } else {
    reply = "\"" + title + "\" was retrieved for your claim, but no paragraphs were matched.";
  }
  if (message.rfind("Explain", 0) != 0) {
    reply = "Regarding your question (\"" + text::truncate_cp(message, 80) + "\"): " + reply;
  }
  return reply;
}

}  // namespace

std::string HeuristicResponder::respond(TemplateId id, const Variables& variables) {
  switch (id) {
    case TemplateId::Route: return route(variables);
    case TemplateId::Keywords: return keywords(variables);
    case TemplateId::MatchScore: return match_score(variables);
    case TemplateId::Chat: return chat(variables);
  }
  return {};
}

}  // namespace refweave::llm
