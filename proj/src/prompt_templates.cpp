// Prompt templates. Bump `version` whenever wording or exemplars change;
// mock fixtures are keyed by variables only, so wording edits do not
// invalidate them.

#include "refweave/llm.hpp"

namespace refweave::llm {

namespace {

const PromptTemplate kRoute{
    TemplateId::Route,
    "route-v1",
    "task: ROUTE\n"
    "You classify the discipline of a claim from a manuscript and choose which preprint "
    "repository to search. Repositories: arxiv (computer science, physics, mathematics), "
    "biorxiv (biology), medrxiv (clinical and medical research). Answer with one JSON object: "
    "{\"primary_repo\": one of arxiv|biorxiv|medrxiv, \"secondary_repo\": one of "
    "arxiv|biorxiv|medrxiv|none, \"confidence\": number in [0,1], \"reasoning\": short text}. "
    "Use a secondary repository when the claim is cross-disciplinary. Never name any other "
    "repository and never suggest specific papers.",
    "<summary>\n{{summary}}\n</summary>\n"
    "<claims>\n{{claims}}\n</claims>\n"
    "Return the routing decision as JSON.",
    {"summary", "claims"}};

const PromptTemplate kKeywords{
    TemplateId::Keywords,
    "keywords-v1",
    "task: KEYWORDS\n"
    "You write literature search keywords for each numbered sentence. For every sentence, "
    "first list domain-specific technical terms (methods, models, datasets, named "
    "phenomena), then core academic concepts grounded in the manuscript context. Use plain "
    "words only: no quotes, no boolean operators, at most 8 terms per sentence. Answer with "
    "one JSON object {\"claims\": [{\"technical_terms\": [...], \"concepts\": [...]}, ...]} "
    "containing exactly one item per sentence, in sentence order.",
    "<summary>\n{{summary}}\n</summary>\n"
    "<surrounding>\n{{surrounding}}\n</surrounding>\n"
    "<sentences>\n{{sentences}}\n</sentences>\n"
    "Return the keyword lists as JSON.",
    {"summary", "surrounding", "sentences"}};

const PromptTemplate kMatchScore{
    TemplateId::MatchScore,
    "match-score-v1",
    "task: MATCH_SCORE\n"
    "You judge how well paragraphs of a candidate paper support or refute a claim. Score "
    "each numbered paragraph in [0,1] (1 = directly states the claim's finding, 0.5 = "
    "related background, 0 = unrelated) and give a one-sentence rationale. Answer with one "
    "JSON object {\"scores\": [{\"index\": n, \"score\": x, \"rationale\": \"...\"}, ...]}.\n"
    "\n"
    "Example 1\n"
    "Claim: Dropout reduces overfitting in deep networks.\n"
    "[4] We randomly drop units during training, which prevents co-adaptation and lowers "
    "test error on all benchmarks.\n"
    "[9] Our experiments use the CIFAR-10 dataset with standard augmentation.\n"
    "Answer: {\"scores\": [{\"index\": 4, \"score\": 0.92, \"rationale\": \"Reports lower test "
    "error from randomly dropping units, the claimed effect.\"}, {\"index\": 9, \"score\": "
    "0.1, \"rationale\": \"Describes the dataset only.\"}]}\n"
    "\n"
    "Example 2\n"
    "Claim: Statins lower LDL cholesterol in adults.\n"
    "[0] Participants receiving atorvastatin showed a 38% reduction in LDL cholesterol "
    "after 12 weeks compared with placebo.\n"
    "[3] Adverse events were mild and evenly distributed across arms.\n"
    "Answer: {\"scores\": [{\"index\": 0, \"score\": 0.95, \"rationale\": \"Trial result "
    "directly measures the LDL reduction.\"}, {\"index\": 3, \"score\": 0.2, \"rationale\": "
    "\"Safety outcome, not efficacy.\"}]}\n"
    "\n"
    "Example 3\n"
    "Claim: Graph neural networks scale poorly to billion-edge graphs.\n"
    "[2] Neighbourhood explosion makes full-batch training infeasible beyond a few million "
    "edges, motivating sampling.\n"
    "[5] Convolutional filters on images share weights across locations.\n"
    "Answer: {\"scores\": [{\"index\": 2, \"score\": 0.8, \"rationale\": \"Explains the "
    "scaling bottleneck for large graphs.\"}, {\"index\": 5, \"score\": 0.05, "
    "\"rationale\": \"About image convolutions.\"}]}",
    "<claim>\n{{claim}}\n</claim>\n"
    "<surrounding>\n{{surrounding}}\n</surrounding>\n"
    "<paragraphs>\n{{paragraphs}}\n</paragraphs>\n"
    "Score every paragraph and return JSON.",
    {"claim", "surrounding", "paragraphs"}};

const PromptTemplate kChat{
    TemplateId::Chat,
    "chat-v1",
    "task: CHAT\n"
    "You help an author understand a reference they are citing. You know the author's "
    "manuscript summary, the claim the reference was found for, and the reference's title, "
    "abstract and matched paragraphs. Refer to matched paragraphs as #<index>. Do not "
    "invent other references.",
    "<summary>\n{{summary}}\n</summary>\n"
    "<claim>\n{{claim}}\n</claim>\n"
    "<reference>\n{{reference}}\n</reference>\n"
    "<trace>\n{{trace}}\n</trace>\n"
    "<history>\n{{history}}\n</history>\n"
    "<message>\n{{message}}\n</message>",
    {"summary", "claim", "reference", "trace", "history", "message"}};

}  // namespace

const PromptTemplate& prompt_template(TemplateId id) {
  switch (id) {
    case TemplateId::Route: return kRoute;
    case TemplateId::Keywords: return kKeywords;
    case TemplateId::MatchScore: return kMatchScore;
    case TemplateId::Chat: return kChat;
  }
  return kChat;
}

}  // namespace refweave::llm
