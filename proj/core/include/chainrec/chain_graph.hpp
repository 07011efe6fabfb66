#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chainrec/corpus.hpp"

namespace chainrec {

/// Which way a chain runs. kDatasetToBaseline is p -> d -> p' -> b and
/// ends at baselines; kBaselineToDataset is the symmetric p -> b -> p' -> d.
enum class ChainDirection { kDatasetToBaseline, kBaselineToDataset };

std::string_view to_string(ChainDirection direction);  // "D->B" / "B->D"
ChainDirection parse_chain_direction(std::string_view text);
/// Direction whose chains terminate at entities of `kind`.
ChainDirection direction_for(EntityKind terminal_kind);
EntityKind terminal_kind(ChainDirection direction);
EntityKind bridge_kind(ChainDirection direction);

/// Paper/baseline/dataset usage graph with both adjacency directions.
class InteractionGraph {
 public:
  using Adjacency = std::map<std::string, std::set<std::string>, std::less<>>;

  const Adjacency& paper_to(EntityKind kind) const {
    return kind == EntityKind::kBaseline ? paper_to_baselines_ : paper_to_datasets_;
  }
  /// entity -> papers using it, for entities of `kind`.
  const Adjacency& entity_to_papers(EntityKind kind) const {
    return kind == EntityKind::kBaseline ? baseline_to_papers_ : dataset_to_papers_;
  }

  bool has_entity(std::string_view id) const { return entity_kind_.contains(std::string(id)); }
  EntityKind kind_of(std::string_view entity_id) const;
  /// Papers using the entity; empty when it is never used.
  const std::set<std::string>& papers_using(std::string_view entity_id) const;
  /// Entities of `kind` used by the paper; empty when none.
  const std::set<std::string>& used_by(std::string_view paper_id, EntityKind kind) const;
  int paper_year(std::string_view paper_id) const;
  bool has_paper(std::string_view paper_id) const { return paper_year_.contains(std::string(paper_id)); }

  std::size_t edge_count() const;

  friend InteractionGraph build_graph(const CorpusStore& store);

 private:
  Adjacency paper_to_baselines_;
  Adjacency paper_to_datasets_;
  Adjacency baseline_to_papers_;
  Adjacency dataset_to_papers_;
  std::map<std::string, EntityKind> entity_kind_;
  std::map<std::string, int> paper_year_;
};

/// Edges mirror every paper's usage lists; papers without entities of a
/// kind are absent from that kind's forward map.
InteractionGraph build_graph(const CorpusStore& store);

/// Number of papers using both x and y. Symmetric. Throws DataError for
/// ids that are not entities of the corpus.
int co_usage_count(const InteractionGraph& graph, std::string_view x, std::string_view y);

struct InteractionChain {
  std::string origin_paper;
  std::string bridge_entity;
  std::string bridge_paper;
  std::string terminal_entity;
  ChainDirection direction = ChainDirection::kDatasetToBaseline;
  int support = 0;

  friend bool operator==(const InteractionChain&, const InteractionChain&) = default;
  friend auto operator<=>(const InteractionChain&, const InteractionChain&) = default;
};

struct ChainOptions {
  /// Skip chains whose terminal entity the origin already uses. Only for
  /// building training data; at inference the origin's usage is unknown.
  bool exclude_origin_terminals = false;
};

/// All chains from the origin through each of its bridge entities, via
/// every other paper using that entity, to every terminal entity that paper
/// uses. Ordered by support desc, bridge id, terminal id, bridge paper id.
std::vector<InteractionChain> enumerate_chains(const InteractionGraph& graph,
                                               const CorpusStore& store,
                                               std::string_view origin_paper,
                                               ChainDirection direction,
                                               const ChainOptions& options = {});

/// Same enumeration for an origin described only by its bridge entities
/// (a free-text query declaring the resources it already uses). No paper is
/// excluded as a bridge unless `origin_id` names one.
std::vector<InteractionChain> enumerate_chains_from(const InteractionGraph& graph,
                                                    std::string_view origin_id,
                                                    const std::set<std::string>& bridges,
                                                    ChainDirection direction,
                                                    const std::set<std::string>& skip_terminals = {});

struct ChainEvidence {
  std::string candidate;
  std::vector<InteractionChain> chains;  // support nonincreasing, at most k

  int total_support() const;
};

/// The k chains ending at `candidate` with the largest support; ties go to
/// the more recent bridge paper, then the smaller bridge paper id.
ChainEvidence top_chains(const InteractionGraph& graph,
                         const std::vector<InteractionChain>& chains,
                         std::string_view candidate, std::size_t k = 3);

struct PoolStats {
  std::set<std::string> pool;
  double recall = 0.0;
  double precision = 0.0;
};

/// Terminal entities over all chains of the origin, scored against its gold
/// set of the terminal kind. Throws DataError("undefined recall") when that
/// gold set is empty.
PoolStats chain_candidate_pool(const InteractionGraph& graph, const CorpusStore& store,
                               std::string_view origin_paper, ChainDirection direction);

/// Recall/precision of an arbitrary pool against a gold set.
PoolStats score_pool(std::set<std::string> pool, const std::set<std::string>& gold);

/// Comparison pool: the `limit` entities of `kind` most used by other
/// papers of the same venue (ties by id). Not a reproduction of any
/// published protocol.
std::set<std::string> venue_candidate_pool(const InteractionGraph& graph,
                                           const CorpusStore& store,
                                           std::string_view origin_paper, EntityKind kind,
                                           std::size_t limit = 100);

struct ChainAnalysisRow {
  std::string paper_id;
  ChainDirection direction;
  std::size_t pool_size = 0;
  std::size_t gold_size = 0;
  double recall = 0.0;
  double precision = 0.0;
  // Optional same-venue comparison.
  double venue_recall = 0.0;
  double venue_precision = 0.0;
};

struct ChainAnalysis {
  std::vector<ChainAnalysisRow> rows;
  /// Mean recall/precision per direction over papers with a defined recall.
  std::map<ChainDirection, std::pair<double, double>> mean;
  std::map<ChainDirection, std::pair<double, double>> venue_mean;
  std::map<ChainDirection, int> skipped;  // papers with empty gold of that kind
};

ChainAnalysis analyze_chains(const InteractionGraph& graph, const CorpusStore& store,
                             const std::vector<std::string>& papers, bool with_venue = false,
                             std::size_t venue_limit = 100);

void write_analysis_text(const ChainAnalysis& analysis, std::ostream& out);
void write_analysis_json(const ChainAnalysis& analysis, std::ostream& out);

/// Line-delimited {origin, direction, bridgeEntity, bridgePaper, terminal, support}.
void write_chains(const std::vector<InteractionChain>& chains, std::ostream& out);
std::vector<InteractionChain> read_chains(std::istream& in);

}  // namespace chainrec
