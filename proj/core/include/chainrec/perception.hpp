#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainrec/corpus.hpp"

namespace chainrec {

class Provider;

/// Sentence window around one mention of an entity.
struct CitationContext {
  std::string entity_id;
  std::string paper_id;
  std::string window_text;
  int section_index = 0;
  int center_sentence_index = 0;
  int first_sentence = 0;  // inclusive
  int last_sentence = 0;   // inclusive
};

struct ContextPool {
  std::string entity_id;
  std::vector<CitationContext> contexts;
};

enum class PerceptionMethod { kExternalSummarizer, kExtractiveFallback };
std::string_view to_string(PerceptionMethod method);
PerceptionMethod parse_perception_method(std::string_view text);

/// Summary of how the community uses an entity, distilled from its pooled
/// citation contexts.
struct CollectivePerception {
  std::string entity_id;
  std::string summary_text;
  int evidence_count = 0;
  PerceptionMethod method = PerceptionMethod::kExtractiveFallback;
};

struct TargetRepresentation {
  std::string entity_id;
  std::string text;
};

inline constexpr std::string_view kDescMarker = "[DESC] ";
inline constexpr std::string_view kCpMarker = " [CP] ";

/// Windows of sentences [i - radius, i + radius] (clipped to the section)
/// around each mention of `entity` in the experiment-centric sections of
/// `paper`. A sentence holding several mentions yields one window.
std::vector<CitationContext> extract_citation_contexts(const CorpusStore& store,
                                                       const PaperRecord& paper,
                                                       const ResourceEntity& entity,
                                                       int radius = 1);

/// All windows of an entity across the corpus, ordered by
/// (paper, section, sentence). Papers in `excluded` contribute nothing.
ContextPool pool_contexts(const CorpusStore& store, std::string_view entity_id, int radius = 1,
                          const std::set<std::string>& excluded = {});

struct ExtractiveOptions {
  double jaccard_threshold = 0.8;
  std::size_t top_n = 8;
  std::size_t byte_budget = 2048;
  std::string separator = " | ";
};

/// Offline summarizer. Drops windows whose token-set Jaccard similarity to
/// an already kept window reaches the threshold, ranks the rest by mean IDF
/// of their distinct terms (IDF over the kept windows), keeps the top N in
/// score order (pool order on ties), joins them and truncates to the byte
/// budget. A pure function of its input.
std::string extractive_summary(const std::vector<std::string>& windows,
                               const ExtractiveOptions& options = {});

/// Uses the provider's summarizer when one is given; on provider failure or
/// without a provider the extractive summary is used instead.
CollectivePerception synthesize_perception(const ContextPool& pool, Provider* summarizer,
                                           const ExtractiveOptions& options = {});

struct RepresentationToggles {
  bool use_description = true;
  bool use_perception = true;
};

/// "[DESC] " + description + " [CP] " + summary. A disabled segment is left
/// empty but its marker stays. Throws DataError when the ids differ.
TargetRepresentation build_target_representation(const ResourceEntity& entity,
                                                 const CollectivePerception& cp,
                                                 RepresentationToggles toggles = {});

/// Inverse of the layout above: {description, summary}.
std::pair<std::string, std::string> split_target_representation(std::string_view text);

using PerceptionMap = std::map<std::string, CollectivePerception>;

/// Line-delimited {entityId, method, evidenceCount, summaryText}.
void write_perception_cache(const PerceptionMap& perceptions, std::ostream& out);
PerceptionMap read_perception_cache(std::istream& in);

}  // namespace chainrec
