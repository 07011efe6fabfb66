#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainrec {

enum class EntityKind { kBaseline, kDataset };

std::string_view to_string(EntityKind kind);
/// Accepts "baseline" or "dataset"; throws DataError otherwise.
EntityKind parse_entity_kind(std::string_view text);
inline EntityKind other_kind(EntityKind kind) {
  return kind == EntityKind::kBaseline ? EntityKind::kDataset : EntityKind::kBaseline;
}

enum class SectionKind { kExperimentCentric, kOther };

/// Keyword matcher deciding whether a section heading is experiment-centric.
struct SectionClassifier {
  std::vector<std::string> keywords{"experiment", "result",    "evaluation", "ablation",
                                    "benchmark",  "setup",     "comparison"};

  SectionKind classify(std::string_view heading) const;
};

/// Classification with the default keyword set.
SectionKind classify_section(std::string_view heading);

struct Section {
  std::string heading;
  SectionKind kind = SectionKind::kOther;
  std::vector<std::string> sentences;
};

struct PaperRecord {
  std::string id;
  std::string title;
  std::string abstract;
  std::string venue;
  int year = 2000;
  std::vector<Section> sections;
  std::set<std::string> used_baselines;
  std::set<std::string> used_datasets;

  const std::set<std::string>& uses(EntityKind kind) const {
    return kind == EntityKind::kBaseline ? used_baselines : used_datasets;
  }
};

struct ResourceEntity {
  std::string id;
  EntityKind kind = EntityKind::kBaseline;
  std::string canonical_name;
  std::set<std::string> aliases;
  std::string description;
  std::optional<std::string> introducing_paper;
  std::optional<std::string> repo;
  std::optional<int> year;
};

struct Mention {
  std::string paper_id;
  std::string entity_id;
  int section_index = 0;
  int sentence_index = 0;
  std::string surface_form;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct GoldSet {
  std::set<std::string> baselines;
  std::set<std::string> datasets;

  const std::set<std::string>& of(EntityKind kind) const {
    return kind == EntityKind::kBaseline ? baselines : datasets;
  }
};

/// Case-folds, turns '-', '_' and '/' into spaces, collapses whitespace and
/// strips surrounding whitespace plus trailing punctuation. Idempotent.
/// Throws DataError("empty canonical form") when nothing survives.
std::string normalize_name(std::string_view raw);

struct MergeRecord {
  std::string kept;
  std::string absorbed;
};

struct MergeOutcome {
  std::vector<ResourceEntity> entities;  // sorted by id
  std::vector<MergeRecord> log;
};

/// Merges entities whose normalized alias sets intersect, transitively.
/// The survivor keeps the smallest id, the union of aliases, the earliest
/// year and the longest description. Throws DataError when a group mixes
/// baselines and datasets.
MergeOutcome merge_aliases(std::vector<ResourceEntity> entities);

struct IngestOptions {
  bool merge_duplicates = true;
  SectionClassifier classifier;
};

/// Validated, immutable scholarly graph: papers, entities, resolved
/// mentions and gold sets. Safe for concurrent readers once built.
class CorpusStore {
 public:
  CorpusStore() = default;

  /// Validates and links the records. Entity names and aliases are
  /// normalized; paper references are checked for existence and kind;
  /// mentions are resolved by alias matching over every sentence.
  static CorpusStore build(std::vector<PaperRecord> papers,
                           std::vector<ResourceEntity> entities,
                           const IngestOptions& options = {});

  const std::map<std::string, PaperRecord>& papers() const { return papers_; }
  const std::map<std::string, ResourceEntity>& entities() const { return entities_; }
  const std::vector<Mention>& mentions() const { return mentions_; }
  const std::map<std::string, GoldSet>& gold_sets() const { return gold_; }
  const std::vector<MergeRecord>& merge_log() const { return merge_log_; }

  bool has_paper(std::string_view id) const;
  bool has_entity(std::string_view id) const;
  const PaperRecord& paper(std::string_view id) const;
  const ResourceEntity& entity(std::string_view id) const;
  const GoldSet& gold(std::string_view paper_id) const;

  /// Mentions inside one paper, ordered by (section, sentence, entity).
  std::span<const Mention> mentions_in(std::string_view paper_id) const;
  /// Ids of papers with at least one mention of the entity, sorted.
  std::vector<std::string> papers_mentioning(std::string_view entity_id) const;
  std::vector<std::string> entity_ids(EntityKind kind) const;

  /// Copy of this store with a different (filtered) mention list.
  CorpusStore with_mentions(std::vector<Mention> mentions) const;

  /// Throws DataError on the first broken reference.
  void check_integrity() const;

 private:
  void index_mentions();

  std::map<std::string, PaperRecord> papers_;
  std::map<std::string, ResourceEntity> entities_;
  std::vector<Mention> mentions_;
  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> mention_ranges_;
  std::map<std::string, GoldSet> gold_;
  std::vector<MergeRecord> merge_log_;
};

/// Reads line-delimited paper/entity records.
CorpusStore parse_corpus(std::istream& in, const IngestOptions& options = {});
CorpusStore ingest_corpus(const std::filesystem::path& path,
                          const IngestOptions& options = {});

/// Canonical serialization: entities then papers, each sorted by id, with
/// sorted id lists. Re-ingesting the output reproduces the store.
void export_corpus(const CorpusStore& store, std::ostream& out);
void write_corpus(std::span<const PaperRecord> papers,
                  std::span<const ResourceEntity> entities, std::ostream& out);

/// Line-delimited {paper, entity, section, sentence, surface}.
void write_mentions(std::span<const Mention> mentions, std::ostream& out);
std::vector<Mention> read_mentions(std::istream& in);

// Rule-based filtering of mentions.

enum class FilterDecision { kKeep, kBorderline, kDrop };
std::string_view to_string(FilterDecision decision);

struct EntityMentionStats {
  int total = 0;
  int experiment = 0;
  bool consistent_naming = true;
};
using MentionStats = std::map<std::string, EntityMentionStats, std::less<>>;

MentionStats compute_mention_stats(const CorpusStore& store);

struct RuleFilterConfig {
  int min_mentions = 2;
  int min_experiment_mentions = 1;
};

FilterDecision rule_filter(const Mention& mention, const MentionStats& stats,
                           const RuleFilterConfig& config = {});

/// External check for borderline mentions. Receives the mention, its entity
/// and the containing sentence; returns approval.
using MentionVerifier =
    std::function<bool(const Mention&, const ResourceEntity&, std::string_view sentence)>;

struct FilterReport {
  std::vector<Mention> kept;
  int keep = 0;
  int borderline_approved = 0;
  int borderline_rejected = 0;
  int drop = 0;
};

/// Applies rule_filter to every mention. Borderline mentions go to the
/// verifier when one is given and are kept only on approval; without a
/// verifier they are kept.
FilterReport filter_mentions(const CorpusStore& store, const RuleFilterConfig& config,
                             const MentionVerifier& verifier = {});

/// Paper id pattern [A-Za-z0-9_.-]+.
bool is_valid_id(std::string_view id);

}  // namespace chainrec
