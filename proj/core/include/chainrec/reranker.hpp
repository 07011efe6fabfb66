#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chainrec/chain_graph.hpp"
#include "chainrec/corpus.hpp"
#include "chainrec/retrieval.hpp"

namespace chainrec {

class Provider;

struct EvidenceBundle {
  Query query;
  EntityKind kind = EntityKind::kBaseline;
  RankedList shortlist;
  std::map<std::string, ChainEvidence> per_candidate;
};

/// Top-k chain evidence for every shortlisted candidate. The origin is the
/// query's source paper, or a pseudo-paper built from the query's declared
/// anchor entities when there is none. Candidates without chains get an
/// empty evidence entry.
EvidenceBundle assemble_evidence(const Query& query, EntityKind kind, const RankedList& shortlist,
                                 const InteractionGraph& graph, const CorpusStore& store,
                                 std::size_t chains_per_candidate = 3);

/// Candidate blocks only, in shortlist order. Shared by the rerank prompt
/// and the R field of training triplets.
std::string serialize_evidence(const EvidenceBundle& bundle, const CorpusStore& store);

/// Full listwise prompt: query block, candidate blocks, fixed instruction.
std::string build_rerank_prompt(const EvidenceBundle& bundle, const CorpusStore& store);

enum class RerankMode { kLlm, kDeterministicFallback };
std::string_view to_string(RerankMode mode);

struct RerankResult {
  RankedList ranking;
  std::string justification;
  RerankMode mode = RerankMode::kDeterministicFallback;
};

struct RerankOptions {
  double alpha = 0.5;  // weight of the retrieval score in the fallback blend
};

/// With a client: prompt it, parse the RANKING line and accept it only if it
/// is a permutation of the shortlist. Otherwise (no client, transport error,
/// bad reply) blend min-max scaled retrieval scores with min-max scaled
/// chain support sums: alpha*r + (1-alpha)*c, ties by retrieval rank.
RerankResult rerank(const EvidenceBundle& bundle, const CorpusStore& store, Provider* client,
                    const RerankOptions& options = {});

struct SftOptions {
  std::size_t shortlist_cap = 20;
  std::size_t chains_per_candidate = 3;
  std::string instruction{kDefaultInstruction};
};

struct SftReport {
  int written = 0;
  int skipped = 0;
  std::vector<std::string> warnings;
};

struct SftTriplet {
  std::string q;
  std::string r;
  std::string a;
};

/// Triplet for one paper and kind, or nullopt when the paper has no gold of
/// that kind. The shortlist mixes the gold items with chain-derived
/// distractors (terminals the paper does not use), is ordered by id and
/// capped; A ranks gold first by chain support.
std::optional<SftTriplet> make_sft_triplet(const CorpusStore& store, const InteractionGraph& graph,
                                           const PaperRecord& paper, EntityKind kind,
                                           const SftOptions& options = {});

/// Writes line-delimited {"Q", "R", "A"} records for both kinds of every
/// split paper.
SftReport emit_sft_triplets(const CorpusStore& store, const InteractionGraph& graph,
                            const std::vector<std::string>& split,
                            const std::filesystem::path& out_path, const SftOptions& options = {});

}  // namespace chainrec
