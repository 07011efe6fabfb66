#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chainrec/adapter.hpp"
#include "chainrec/chain_graph.hpp"
#include "chainrec/corpus.hpp"
#include "chainrec/perception.hpp"
#include "chainrec/reranker.hpp"
#include "chainrec/retrieval.hpp"

namespace chainrec {

class Provider;

enum class RetrievalMethod { kDense, kBm25 };
std::string_view to_string(RetrievalMethod method);
RetrievalMethod parse_retrieval_method(std::string_view text);

struct PipelineConfig {
  RetrievalMethod method = RetrievalMethod::kDense;
  double temperature = 20.0;
  std::size_t shortlist_size = 20;
  bool rerank = true;
  bool use_chains = true;
  /// Send rerank prompts to the provider; otherwise use the deterministic blend.
  bool llm_rerank = false;
  double alpha = 0.5;
  std::size_t chains_per_candidate = 3;
  RepresentationToggles representation;
  std::string instruction{kDefaultInstruction};

  /// Throws UsageError for out-of-range values.
  void validate() const;
};

/// Target representations plus the indexes built over them, for one kind.
struct KindIndex {
  std::vector<TargetRepresentation> representations;
  DenseIndex dense;
};

struct Recommendation {
  RankedList ranking;
  RankedList stage1;
  std::optional<EvidenceBundle> evidence;
  std::optional<RerankMode> mode;
  std::string justification;
};

/// Two-stage recommender: dense (or BM25) recall over target
/// representations, then chain-evidence reranking of the shortlist.
/// Read-only after construction; recommend() may run concurrently.
class Pipeline {
 public:
  /// Builds representations from the perceptions (missing entries count as
  /// empty perception) and embeds them through the provider.
  Pipeline(const CorpusStore& store, const PerceptionMap& perceptions, Provider& provider,
           PipelineConfig config, std::optional<AdapterParams> adapter = std::nullopt);

  /// Same, reusing prebuilt dense indexes (rows: raw normalized embeddings
  /// of the representations, in entity-id order).
  Pipeline(const CorpusStore& store, const PerceptionMap& perceptions, Provider& provider,
           PipelineConfig config, std::map<EntityKind, DenseIndex> prebuilt,
           std::optional<AdapterParams> adapter = std::nullopt);

  RankedList stage1(const Query& query, EntityKind kind, std::size_t depth) const;

  /// Stage 1 to `depth` entries; when reranking, the first shortlist_size
  /// entries are reordered and the rest keep their stage-1 order below them.
  Recommendation recommend(const Query& query, EntityKind kind, std::size_t depth) const;

  const PipelineConfig& config() const { return config_; }
  const KindIndex& index(EntityKind kind) const { return indexes_.at(kind); }
  const InteractionGraph& graph() const { return graph_; }
  const CorpusStore& store() const { return store_; }

  /// Raw (unadapted) index over the representations of one kind.
  static KindIndex build_kind_index(const CorpusStore& store, const PerceptionMap& perceptions,
                                    Provider& provider, EntityKind kind,
                                    RepresentationToggles toggles);

 private:
  void finish(std::map<EntityKind, DenseIndex> prebuilt);
  EmbeddingVector embed_query(const Query& query) const;

  const CorpusStore& store_;
  const PerceptionMap& perceptions_;
  Provider& provider_;
  PipelineConfig config_;
  std::optional<AdapterParams> adapter_;
  InteractionGraph graph_;
  std::map<EntityKind, KindIndex> indexes_;
  std::map<EntityKind, Bm25Index> bm25_;
};

/// Representations of every entity of `kind`, in id order.
std::vector<TargetRepresentation> build_representations(const CorpusStore& store,
                                                        const PerceptionMap& perceptions,
                                                        EntityKind kind,
                                                        RepresentationToggles toggles = {});

/// Pools and summarizes the contexts of every entity. `jobs` > 1 runs
/// entities in parallel; output does not depend on it.
PerceptionMap build_perceptions(const CorpusStore& store, Provider* summarizer, int radius = 1,
                                const ExtractiveOptions& options = {},
                                const std::set<std::string>& excluded_papers = {},
                                std::size_t jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace chainrec
