#include "chainrec/chain_graph.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "chainrec/error.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"

namespace chainrec {

namespace {
const std::set<std::string> kEmpty;
}

std::string_view to_string(ChainDirection direction) {
  return direction == ChainDirection::kDatasetToBaseline ? "D->B" : "B->D";
}

ChainDirection parse_chain_direction(std::string_view text) {
  if (text == "D->B") return ChainDirection::kDatasetToBaseline;
  if (text == "B->D") return ChainDirection::kBaselineToDataset;
  throw DataError("unknown chain direction '" + std::string(text) + "'");
}

ChainDirection direction_for(EntityKind terminal) {
  return terminal == EntityKind::kBaseline ? ChainDirection::kDatasetToBaseline
                                           : ChainDirection::kBaselineToDataset;
}

EntityKind terminal_kind(ChainDirection direction) {
  return direction == ChainDirection::kDatasetToBaseline ? EntityKind::kBaseline
                                                         : EntityKind::kDataset;
}

EntityKind bridge_kind(ChainDirection direction) { return other_kind(terminal_kind(direction)); }

EntityKind InteractionGraph::kind_of(std::string_view entity_id) const {
  auto it = entity_kind_.find(std::string(entity_id));
  if (it == entity_kind_.end()) throw DataError("unknown entity id " + std::string(entity_id));
  return it->second;
}

const std::set<std::string>& InteractionGraph::papers_using(std::string_view entity_id) const {
  const auto& adj = entity_to_papers(kind_of(entity_id));
  auto it = adj.find(entity_id);
  return it == adj.end() ? kEmpty : it->second;
}

const std::set<std::string>& InteractionGraph::used_by(std::string_view paper_id,
                                                       EntityKind kind) const {
  const auto& adj = paper_to(kind);
  auto it = adj.find(paper_id);
  return it == adj.end() ? kEmpty : it->second;
}

int InteractionGraph::paper_year(std::string_view paper_id) const {
  auto it = paper_year_.find(std::string(paper_id));
  if (it == paper_year_.end()) throw DataError("unknown paper id " + std::string(paper_id));
  return it->second;
}

std::size_t InteractionGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [p, s] : paper_to_baselines_) n += s.size();
  for (const auto& [p, s] : paper_to_datasets_) n += s.size();
  return n;
}

InteractionGraph build_graph(const CorpusStore& store) {
  InteractionGraph g;
  for (const auto& [id, e] : store.entities()) g.entity_kind_.emplace(id, e.kind);
  for (const auto& [id, p] : store.papers()) {
    g.paper_year_.emplace(id, p.year);
    if (!p.used_baselines.empty()) g.paper_to_baselines_.emplace(id, p.used_baselines);
    if (!p.used_datasets.empty()) g.paper_to_datasets_.emplace(id, p.used_datasets);
    for (const auto& b : p.used_baselines) g.baseline_to_papers_[b].insert(id);
    for (const auto& d : p.used_datasets) g.dataset_to_papers_[d].insert(id);
  }
  return g;
}

int co_usage_count(const InteractionGraph& graph, std::string_view x, std::string_view y) {
  const auto& a = graph.papers_using(x);
  const auto& b = graph.papers_using(y);
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  int count = 0;
  for (const auto& p : small) count += static_cast<int>(large.count(p));
  return count;
}

namespace {

bool chain_order(const InteractionChain& a, const InteractionChain& b) {
  if (a.support != b.support) return a.support > b.support;
  return std::tie(a.bridge_entity, a.terminal_entity, a.bridge_paper) <
         std::tie(b.bridge_entity, b.terminal_entity, b.bridge_paper);
}

}  // namespace

std::vector<InteractionChain> enumerate_chains_from(const InteractionGraph& graph,
                                                    std::string_view origin_id,
                                                    const std::set<std::string>& bridges,
                                                    ChainDirection direction,
                                                    const std::set<std::string>& skip_terminals) {
  const EntityKind terminal = terminal_kind(direction);
  std::vector<InteractionChain> chains;
  // Support depends only on (bridge, terminal); memoize per pair.
  std::map<std::pair<std::string, std::string>, int> support;
  for (const auto& bridge : bridges) {
    for (const auto& bridge_paper : graph.papers_using(bridge)) {
      if (bridge_paper == origin_id) continue;
      for (const auto& t : graph.used_by(bridge_paper, terminal)) {
        if (skip_terminals.contains(t)) continue;
        auto [it, inserted] = support.try_emplace({bridge, t}, 0);
        if (inserted) it->second = co_usage_count(graph, bridge, t);
        chains.push_back({std::string(origin_id), bridge, bridge_paper, t, direction, it->second});
      }
    }
  }
  std::sort(chains.begin(), chains.end(), chain_order);
  return chains;
}

std::vector<InteractionChain> enumerate_chains(const InteractionGraph& graph,
                                               const CorpusStore& store,
                                               std::string_view origin_paper,
                                               ChainDirection direction,
                                               const ChainOptions& options) {
  const auto& paper = store.paper(origin_paper);
  const auto& bridges = paper.uses(bridge_kind(direction));
  const auto& skip = options.exclude_origin_terminals ? paper.uses(terminal_kind(direction)) : kEmpty;
  return enumerate_chains_from(graph, origin_paper, bridges, direction, skip);
}

int ChainEvidence::total_support() const {
  int sum = 0;
  for (const auto& c : chains) sum += c.support;
  return sum;
}

ChainEvidence top_chains(const InteractionGraph& graph,
                         const std::vector<InteractionChain>& chains,
                         std::string_view candidate, std::size_t k) {
  ChainEvidence evidence{std::string(candidate), {}};
  for (const auto& c : chains) {
    if (c.terminal_entity == candidate) evidence.chains.push_back(c);
  }
  auto year = [&](const std::string& paper) {
    return graph.has_paper(paper) ? graph.paper_year(paper) : 0;
  };
  std::sort(evidence.chains.begin(), evidence.chains.end(),
            [&](const InteractionChain& a, const InteractionChain& b) {
              if (a.support != b.support) return a.support > b.support;
              const int ya = year(a.bridge_paper);
              const int yb = year(b.bridge_paper);
              if (ya != yb) return ya > yb;
              return std::tie(a.bridge_paper, a.bridge_entity) <
                     std::tie(b.bridge_paper, b.bridge_entity);
            });
  if (evidence.chains.size() > k) evidence.chains.resize(k);
  return evidence;
}

PoolStats score_pool(std::set<std::string> pool, const std::set<std::string>& gold) {
  if (gold.empty()) throw DataError("undefined recall: empty gold set");
  PoolStats stats;
  std::size_t hits = 0;
  for (const auto& g : gold) hits += pool.count(g);
  stats.recall = static_cast<double>(hits) / static_cast<double>(gold.size());
  stats.precision = pool.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pool.size());
  stats.pool = std::move(pool);
  return stats;
}

PoolStats chain_candidate_pool(const InteractionGraph& graph, const CorpusStore& store,
                               std::string_view origin_paper, ChainDirection direction) {
  const auto& gold = store.gold(origin_paper).of(terminal_kind(direction));
  if (gold.empty()) {
    throw DataError("undefined recall: paper " + std::string(origin_paper) + " has no gold " +
                    std::string(to_string(terminal_kind(direction))) + "s");
  }
  std::set<std::string> pool;
  for (const auto& c : enumerate_chains(graph, store, origin_paper, direction)) {
    pool.insert(c.terminal_entity);
  }
  return score_pool(std::move(pool), gold);
}

std::set<std::string> venue_candidate_pool(const InteractionGraph& graph,
                                           const CorpusStore& store,
                                           std::string_view origin_paper, EntityKind kind,
                                           std::size_t limit) {
  const auto& origin = store.paper(origin_paper);
  std::map<std::string, int> counts;
  for (const auto& [id, p] : store.papers()) {
    if (id == origin.id || p.venue != origin.venue) continue;
    for (const auto& e : graph.used_by(id, kind)) ++counts[e];
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> pool;
  for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) pool.insert(ranked[i].first);
  return pool;
}

ChainAnalysis analyze_chains(const InteractionGraph& graph, const CorpusStore& store,
                             const std::vector<std::string>& papers, bool with_venue,
                             std::size_t venue_limit) {
  ChainAnalysis analysis;
  for (ChainDirection dir : {ChainDirection::kDatasetToBaseline, ChainDirection::kBaselineToDataset}) {
    double recall_sum = 0.0;
    double precision_sum = 0.0;
    double venue_recall_sum = 0.0;
    double venue_precision_sum = 0.0;
    int n = 0;
    analysis.skipped[dir] = 0;
    for (const auto& paper_id : papers) {
      const auto& gold = store.gold(paper_id).of(terminal_kind(dir));
      if (gold.empty()) {
        ++analysis.skipped[dir];
        continue;
      }
      const auto stats = chain_candidate_pool(graph, store, paper_id, dir);
      ChainAnalysisRow row{paper_id, dir, stats.pool.size(), gold.size(), stats.recall,
                           stats.precision};
      if (with_venue) {
        const auto venue = score_pool(
            venue_candidate_pool(graph, store, paper_id, terminal_kind(dir), venue_limit), gold);
        row.venue_recall = venue.recall;
        row.venue_precision = venue.precision;
        venue_recall_sum += venue.recall;
        venue_precision_sum += venue.precision;
      }
      recall_sum += stats.recall;
      precision_sum += stats.precision;
      ++n;
      analysis.rows.push_back(row);
    }
    const double denom = n > 0 ? static_cast<double>(n) : 1.0;
    analysis.mean[dir] = {recall_sum / denom, precision_sum / denom};
    if (with_venue) analysis.venue_mean[dir] = {venue_recall_sum / denom, venue_precision_sum / denom};
  }
  return analysis;
}

void write_analysis_text(const ChainAnalysis& analysis, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %-5s %8s %8s %10s %10s\n", "paper", "dir", "pool", "gold",
                "recall", "precision");
  out << buf;
  for (const auto& r : analysis.rows) {
    std::snprintf(buf, sizeof buf, "%-20s %-5s %8zu %8zu %10.4f %10.4f\n", r.paper_id.c_str(),
                  std::string(to_string(r.direction)).c_str(), r.pool_size, r.gold_size, r.recall,
                  r.precision);
    out << buf;
  }
  for (const auto& [dir, m] : analysis.mean) {
    std::snprintf(buf, sizeof buf, "mean %-5s chain-derived  recall=%.4f precision=%.4f (skipped %d)\n",
                  std::string(to_string(dir)).c_str(), m.first, m.second, analysis.skipped.at(dir));
    out << buf;
    if (auto v = analysis.venue_mean.find(dir); v != analysis.venue_mean.end()) {
      std::snprintf(buf, sizeof buf, "mean %-5s same-venue     recall=%.4f precision=%.4f\n",
                    std::string(to_string(dir)).c_str(), v->second.first, v->second.second);
      out << buf;
    }
  }
}

void write_analysis_json(const ChainAnalysis& analysis, std::ostream& out) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : analysis.rows) {
    rows.push_back({{"paper", r.paper_id},
                    {"direction", std::string(to_string(r.direction))},
                    {"pool_size", r.pool_size},
                    {"gold_size", r.gold_size},
                    {"recall", r.recall},
                    {"precision", r.precision},
                    {"venue_recall", r.venue_recall},
                    {"venue_precision", r.venue_precision}});
  }
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [dir, m] : analysis.mean) {
    nlohmann::json entry{{"recall", m.first}, {"precision", m.second},
                         {"skipped", analysis.skipped.at(dir)}};
    if (auto v = analysis.venue_mean.find(dir); v != analysis.venue_mean.end()) {
      entry["venue_recall"] = v->second.first;
      entry["venue_precision"] = v->second.second;
    }
    means[std::string(to_string(dir))] = entry;
  }
  out << nlohmann::json{{"rows", rows}, {"mean", means}}.dump(2) << '\n';
}

void write_chains(const std::vector<InteractionChain>& chains, std::ostream& out) {
  for (const auto& c : chains) {
    nlohmann::json j{{"origin", c.origin_paper},
                     {"direction", std::string(to_string(c.direction))},
                     {"bridgeEntity", c.bridge_entity},
                     {"bridgePaper", c.bridge_paper},
                     {"terminal", c.terminal_entity},
                     {"support", c.support}};
    out << j.dump() << '\n';
  }
}

std::vector<InteractionChain> read_chains(std::istream& in) {
  std::vector<InteractionChain> chains;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      chains.push_back({j.at("origin").get<std::string>(), j.at("bridgeEntity").get<std::string>(),
                        j.at("bridgePaper").get<std::string>(), j.at("terminal").get<std::string>(),
                        parse_chain_direction(j.at("direction").get<std::string>()),
                        j.at("support").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("chain record: ") + e.what());
    }
  }
  return chains;
}

}  // namespace chainrec
