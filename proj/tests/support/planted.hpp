#pragma once

// Corpora whose correct answers are known by construction.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chainrec/adapter.hpp"
#include "chainrec/corpus.hpp"

namespace chainrec::testing {

struct PlantedCorpus {
  std::vector<PaperRecord> papers;
  std::vector<ResourceEntity> entities;
  std::vector<std::string> split;

  CorpusStore store() const { return CorpusStore::build(papers, entities); }
};

/// Every entity's description is a single signature token whose mock
/// embedding bucket is shared with no other signature and with no token of
/// the query template or the representation markers. Each paper's abstract
/// lists the signatures of the entities it uses, so with the perception
/// segment empty the gold targets of a query are exactly the targets with a
/// nonzero signature overlap.
struct PlantedRetrieval : PlantedCorpus {
  std::map<std::string, std::string> signature;  // entity id -> token
  std::size_t dim = 0;
};
PlantedRetrieval planted_retrieval(std::size_t per_kind, std::size_t papers, std::size_t max_gold,
                                   std::size_t dim, std::uint64_t seed);

/// Query papers Q01..Qn each use dataset d<i> and three gold baselines drawn
/// from the upper ids b006..b020. Two bridge papers per query reuse d<i> with
/// the same gold baselines; one more reuses d<i> with a single distractor.
/// All baseline descriptions are identical, so stage-1 scores tie and
/// stage-1 order is by id.
PlantedCorpus planted_rerank(std::size_t queries);

/// Origin P0 uses dataset d0 and gold baselines b01..b<gold>. Bridge paper
/// P1 uses d0, the first `reached` gold baselines and `distractors` other
/// baselines. D->B pool recall is reached/gold and precision is
/// reached/(reached + distractors).
PlantedCorpus planted_chain_pool(std::size_t gold, std::size_t reached, std::size_t distractors);

}  // namespace chainrec::testing

namespace chainrec::testing {

/// Aligned pairs whose query is basis vector e_(i mod dim) plus small noise
/// and whose target is the same basis vector, packed so every batch holds
/// each basis direction once. At W = I the diagonal is already confident and
/// the off-diagonal logits sit at zero; mapping the basis to a regular
/// simplex drives the whole loss toward zero.
std::vector<TrainBatch> simplex_training_set(std::size_t dim, std::size_t batches, double noise,
                                             std::uint64_t seed);

}  // namespace chainrec::testing
