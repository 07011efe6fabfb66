#include "chainrec/reranker.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "chainrec/error.hpp"
#include "chainrec/providers.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"

namespace chainrec {

namespace {

constexpr std::size_t kDescriptionSnippet = 300;

std::string one_line(std::string_view text, std::size_t max_bytes) {
  std::string out = truncate_utf8(text, max_bytes);
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

std::string chain_text(const InteractionChain& c) {
  return c.origin_paper + " → " + c.bridge_entity + " → " + c.bridge_paper + " → " +
         c.terminal_entity + " (support=" + std::to_string(c.support) + ")";
}

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

EvidenceBundle assemble_evidence(const Query& query, EntityKind kind, const RankedList& shortlist,
                                 const InteractionGraph& graph, const CorpusStore& store,
                                 std::size_t chains_per_candidate) {
  (void)store;
  EvidenceBundle bundle{query, kind, shortlist, {}};
  const ChainDirection direction = direction_for(kind);
  const auto& declared = bridge_kind(direction) == EntityKind::kBaseline ? query.anchor_baselines
                                                                         : query.anchor_datasets;
  std::set<std::string> bridges;
  for (const auto& id : declared) {
    if (graph.has_entity(id) && graph.kind_of(id) == bridge_kind(direction)) bridges.insert(id);
  }
  const std::string origin =
      query.source_paper_id ? *query.source_paper_id : "query:" + query.query_id;
  const auto chains = enumerate_chains_from(graph, origin, bridges, direction);
  for (const auto& entry : shortlist.entries) {
    bundle.per_candidate[entry.entity_id] =
        top_chains(graph, chains, entry.entity_id, chains_per_candidate);
  }
  return bundle;
}

std::string serialize_evidence(const EvidenceBundle& bundle, const CorpusStore& store) {
  std::string out;
  for (const auto& entry : bundle.shortlist.entries) {
    const auto& entity = store.entity(entry.entity_id);
    out += "CANDIDATE " + std::to_string(entry.rank) + ": id=" + entry.entity_id + " name=" +
           entity.canonical_name + " retrieval_score=" + format_score(entry.score) + "\n";
    out += "DESCRIPTION: " + one_line(entity.description, kDescriptionSnippet) + "\n";
    out += "CHAINS:\n";
    auto it = bundle.per_candidate.find(entry.entity_id);
    if (it == bundle.per_candidate.end() || it->second.chains.empty()) {
      out += "- none\n";
    } else {
      for (const auto& c : it->second.chains) out += "- " + chain_text(c) + "\n";
    }
    out += "\n";
  }
  return out;
}

std::string build_rerank_prompt(const EvidenceBundle& bundle, const CorpusStore& store) {
  const std::string kind(to_string(bundle.kind));
  std::string prompt;
  prompt += "TASK: rank the candidate " + kind + "s for the research idea below.\n";
  prompt += "QUERY: " + one_line(format_query(bundle.query), 4096) + "\n\n";
  prompt += serialize_evidence(bundle, store);
  prompt +=
      "INSTRUCTIONS: Reason step by step. Rely primarily on each candidate's top interaction "
      "chains and their co-usage support counts; use descriptions and retrieval scores only as "
      "secondary signals. Give a brief justification, then finish with a single line of the "
      "form\n";
  prompt += "RANKING: <id> > <id> > ...\n";
  prompt += "listing every candidate id exactly once.\n";
  return prompt;
}

std::string_view to_string(RerankMode mode) {
  return mode == RerankMode::kLlm ? "llm" : "deterministic-fallback";
}

namespace {

std::vector<double> min_max(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.0);
  if (*hi > *lo) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / (*hi - *lo);
  }
  return out;
}

RerankResult fallback(const EvidenceBundle& bundle, const RerankOptions& options,
                      std::string reason) {
  const auto& entries = bundle.shortlist.entries;
  std::vector<double> retrieval, support;
  for (const auto& e : entries) {
    retrieval.push_back(e.score);
    auto it = bundle.per_candidate.find(e.entity_id);
    support.push_back(it == bundle.per_candidate.end() ? 0.0 : it->second.total_support());
  }
  const auto r = min_max(retrieval);
  const auto c = min_max(support);
  std::vector<double> blended(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    blended[i] = options.alpha * r[i] + (1.0 - options.alpha) * c[i];
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  // Shortlist order is retrieval rank, so a stable sort breaks ties by it.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return blended[a] > blended[b]; });

  RerankResult result;
  result.mode = RerankMode::kDeterministicFallback;
  result.ranking.query_id = bundle.shortlist.query_id;
  for (std::size_t i = 0; i < order.size(); ++i) {
    result.ranking.entries.push_back(
        {entries[order[i]].entity_id, blended[order[i]], static_cast<int>(i + 1)});
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "blend of retrieval score and chain support (alpha=%.3f)",
                options.alpha);
  result.justification = reason.empty() ? buf : reason + "; " + buf;
  return result;
}

}  // namespace

RerankResult rerank(const EvidenceBundle& bundle, const CorpusStore& store, Provider* client,
                    const RerankOptions& options) {
  if (client == nullptr) return fallback(bundle, options, {});

  RerankReply reply;
  try {
    reply = client->rerank(build_rerank_prompt(bundle, store));
  } catch (const ProviderError& e) {
    return fallback(bundle, options, std::string("reranker unavailable: ") + e.what());
  }
  const auto ids = parse_ranking_line(reply.ranking);
  if (!ids) return fallback(bundle, options, "reranker reply lacks a RANKING line");

  const auto expected = bundle.shortlist.ids();
  const std::set<std::string> expected_set(expected.begin(), expected.end());
  const std::set<std::string> got_set(ids->begin(), ids->end());
  if (ids->size() != expected.size() || got_set.size() != ids->size() || got_set != expected_set) {
    return fallback(bundle, options, "reranker reply is not a permutation of the shortlist");
  }

  RerankResult result;
  result.mode = RerankMode::kLlm;
  result.justification = reply.justification;
  result.ranking.query_id = bundle.shortlist.query_id;
  const auto n = ids->size();
  for (std::size_t i = 0; i < n; ++i) {
    result.ranking.entries.push_back(
        {(*ids)[i], static_cast<double>(n - i), static_cast<int>(i + 1)});
  }
  return result;
}

// ---------------------------------------------------------------------------

std::optional<SftTriplet> make_sft_triplet(const CorpusStore& store, const InteractionGraph& graph,
                                           const PaperRecord& paper, EntityKind kind,
                                           const SftOptions& options) {
  const auto& gold = paper.uses(kind);
  if (gold.empty()) return std::nullopt;
  const ChainDirection direction = direction_for(kind);
  const Query query = query_from_paper(paper, options.instruction);

  const auto all_chains = enumerate_chains(graph, store, paper.id, direction);
  auto support_of = [&](const std::string& id) {
    return top_chains(graph, all_chains, id, options.chains_per_candidate).total_support();
  };
  auto by_support = [&](std::vector<std::string>& ids) {
    std::vector<std::pair<int, std::string>> keyed;
    for (auto& id : ids) keyed.emplace_back(-support_of(id), std::move(id));
    std::sort(keyed.begin(), keyed.end());
    ids.clear();
    for (auto& [s, id] : keyed) ids.push_back(std::move(id));
  };

  std::vector<std::string> gold_order(gold.begin(), gold.end());
  by_support(gold_order);
  if (gold_order.size() > options.shortlist_cap) gold_order.resize(options.shortlist_cap);

  // Distractors come from chains that skip the paper's own terminals.
  const auto distractor_chains =
      enumerate_chains(graph, store, paper.id, direction, ChainOptions{.exclude_origin_terminals = true});
  std::set<std::string> distractor_set;
  for (const auto& c : distractor_chains) distractor_set.insert(c.terminal_entity);
  std::vector<std::string> distractors(distractor_set.begin(), distractor_set.end());
  by_support(distractors);
  const std::size_t room = options.shortlist_cap - gold_order.size();
  if (distractors.size() > room) distractors.resize(room);

  std::vector<std::string> shortlist_ids(gold_order);
  shortlist_ids.insert(shortlist_ids.end(), distractors.begin(), distractors.end());
  std::sort(shortlist_ids.begin(), shortlist_ids.end());

  RankedList shortlist{paper.id, {}};
  for (std::size_t i = 0; i < shortlist_ids.size(); ++i) {
    shortlist.entries.push_back({shortlist_ids[i], 0.0, static_cast<int>(i + 1)});
  }
  EvidenceBundle bundle{query, kind, shortlist, {}};
  for (const auto& id : shortlist_ids) {
    bundle.per_candidate[id] = top_chains(graph, all_chains, id, options.chains_per_candidate);
  }

  std::vector<std::string> ranking(gold_order);
  ranking.insert(ranking.end(), distractors.begin(), distractors.end());

  const std::string kind_name(to_string(kind));
  std::string a;
  a += "The query asks for " + kind_name + "s suited to: " + one_line(query.synopsis_text, 200) +
       "\n";
  a += "Evidence review:\n";
  for (const auto& id : ranking) {
    const auto& ev = bundle.per_candidate.at(id);
    a += "- " + id + " (" + store.entity(id).canonical_name + "): ";
    if (ev.chains.empty()) {
      a += "no interaction chains link it to this work.\n";
    } else {
      a += "strongest chain " + chain_text(ev.chains.front()) + "; total support over top " +
           std::to_string(ev.chains.size()) + " chains = " + std::to_string(ev.total_support()) +
           ".\n";
    }
  }
  a += "Decision: " + join(gold_order, ", ") +
       " fit the experimental setting best given how often they are co-used with the resources "
       "this work builds on; the remaining candidates have weaker or no chain support.\n";
  a += format_ranking_line(ranking);

  return SftTriplet{format_query(query), serialize_evidence(bundle, store), std::move(a)};
}

SftReport emit_sft_triplets(const CorpusStore& store, const InteractionGraph& graph,
                            const std::vector<std::string>& split,
                            const std::filesystem::path& out_path, const SftOptions& options) {
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path.string());
  SftReport report;
  for (const auto& paper_id : split) {
    const auto& paper = store.paper(paper_id);
    for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
      auto triplet = make_sft_triplet(store, graph, paper, kind, options);
      if (!triplet) {
        ++report.skipped;
        report.warnings.push_back("paper " + paper_id + " has no gold " +
                                  std::string(to_string(kind)) + "s; skipped");
        continue;
      }
      out << nlohmann::json{{"Q", triplet->q}, {"R", triplet->r}, {"A", triplet->a}}.dump() << '\n';
      ++report.written;
    }
  }
  return report;
}

}  // namespace chainrec
