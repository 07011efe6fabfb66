#include "chainrec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "chainrec/error.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"

namespace chainrec {

using nlohmann::json;

std::string_view to_string(EntityKind kind) {
  return kind == EntityKind::kBaseline ? "baseline" : "dataset";
}

EntityKind parse_entity_kind(std::string_view text) {
  if (text == "baseline") return EntityKind::kBaseline;
  if (text == "dataset") return EntityKind::kDataset;
  throw DataError("unknown entity kind '" + std::string(text) + "'");
}

SectionKind SectionClassifier::classify(std::string_view heading) const {
  const std::string folded = case_fold(heading);
  for (const auto& keyword : keywords) {
    if (folded.find(keyword) != std::string::npos) return SectionKind::kExperimentCentric;
  }
  return SectionKind::kOther;
}

SectionKind classify_section(std::string_view heading) {
  static const SectionClassifier kDefault;
  return kDefault.classify(heading);
}

bool is_valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '-';
  });
}

std::string normalize_name(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    char c = ch;
    if (c == '-' || c == '_' || c == '/') c = ' ';
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (space) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  // Trailing punctuation and any space it exposes.
  while (!out.empty()) {
    auto c = static_cast<unsigned char>(out.back());
    const bool punct = c < 0x80 && c > 0x20 && c != 0x7f &&
                       !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z'));
    if (punct || c == ' ') {
      out.pop_back();
    } else {
      break;
    }
  }
  if (out.empty()) throw DataError("empty canonical form for name '" + std::string(raw) + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Alias merging

namespace {

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::size_t> parent;
};

}  // namespace

MergeOutcome merge_aliases(std::vector<ResourceEntity> entities) {
  std::sort(entities.begin(), entities.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  for (auto& e : entities) {
    std::set<std::string> normalized;
    for (const auto& alias : e.aliases) normalized.insert(normalize_name(alias));
    e.aliases = std::move(normalized);
  }

  DisjointSet sets(entities.size());
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    for (const auto& alias : entities[i].aliases) {
      auto [it, inserted] = owner.emplace(alias, i);
      if (!inserted) sets.unite(it->second, i);
    }
  }

  MergeOutcome outcome;
  std::map<std::size_t, std::size_t> root_to_output;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const std::size_t root = sets.find(i);
    auto found = root_to_output.find(root);
    if (found == root_to_output.end()) {
      // Entities are sorted by id, so the first member seen is the survivor.
      root_to_output.emplace(root, outcome.entities.size());
      outcome.entities.push_back(std::move(entities[i]));
      continue;
    }
    ResourceEntity& kept = outcome.entities[found->second];
    ResourceEntity& other = entities[i];
    if (kept.kind != other.kind) {
      throw DataError("cannot merge " + kept.id + " (" + std::string(to_string(kept.kind)) +
                      ") with " + other.id + " (" + std::string(to_string(other.kind)) +
                      "): kinds differ");
    }
    kept.aliases.insert(other.aliases.begin(), other.aliases.end());
    if (other.year && (!kept.year || *other.year < *kept.year)) kept.year = other.year;
    if (other.description.size() > kept.description.size()) {
      kept.description = std::move(other.description);
    }
    if (!kept.introducing_paper) kept.introducing_paper = std::move(other.introducing_paper);
    if (!kept.repo) kept.repo = std::move(other.repo);
    outcome.log.push_back({kept.id, other.id});
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// CorpusStore

namespace {

struct AliasPattern {
  std::vector<std::string> tokens;
  std::string entity_id;
  std::string alias;
};

std::vector<Mention> resolve_mentions(const std::map<std::string, PaperRecord>& papers,
                                      const std::map<std::string, ResourceEntity>& entities) {
  std::unordered_map<std::string, std::vector<AliasPattern>> by_first_token;
  for (const auto& [id, entity] : entities) {
    for (const auto& alias : entity.aliases) {
      auto tokens = mention_tokens(alias);
      if (tokens.empty()) continue;
      by_first_token[tokens.front()].push_back({tokens, id, alias});
    }
  }

  std::vector<Mention> mentions;
  for (const auto& [paper_id, paper] : papers) {
    for (std::size_t s = 0; s < paper.sections.size(); ++s) {
      const auto& sentences = paper.sections[s].sentences;
      for (std::size_t j = 0; j < sentences.size(); ++j) {
        const auto tokens = mention_tokens(sentences[j]);
        for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
          auto bucket = by_first_token.find(tokens[pos]);
          if (bucket == by_first_token.end()) continue;
          // Longest matching alias per entity at this position.
          std::map<std::string, const AliasPattern*> best;
          for (const auto& pattern : bucket->second) {
            if (pos + pattern.tokens.size() > tokens.size()) continue;
            if (!std::equal(pattern.tokens.begin(), pattern.tokens.end(),
                            tokens.begin() + static_cast<std::ptrdiff_t>(pos))) {
              continue;
            }
            auto& slot = best[pattern.entity_id];
            if (slot == nullptr || pattern.tokens.size() > slot->tokens.size()) slot = &pattern;
          }
          for (const auto& [entity_id, pattern] : best) {
            mentions.push_back({paper_id, entity_id, static_cast<int>(s), static_cast<int>(j),
                                pattern->alias});
          }
        }
      }
    }
  }
  return mentions;
}

bool mention_less(const Mention& a, const Mention& b) {
  return std::tie(a.paper_id, a.section_index, a.sentence_index, a.entity_id, a.surface_form) <
         std::tie(b.paper_id, b.section_index, b.sentence_index, b.entity_id, b.surface_form);
}

}  // namespace

CorpusStore CorpusStore::build(std::vector<PaperRecord> papers,
                               std::vector<ResourceEntity> entities,
                               const IngestOptions& options) {
  CorpusStore store;

  std::set<std::string> seen;
  for (auto& e : entities) {
    if (!is_valid_id(e.id)) throw DataError("invalid entity id '" + e.id + "'");
    if (!seen.insert(e.id).second) throw DataError("duplicate entity id " + e.id);
    e.canonical_name = normalize_name(e.canonical_name);
    std::set<std::string> aliases{e.canonical_name};
    for (const auto& alias : e.aliases) aliases.insert(normalize_name(alias));
    e.aliases = std::move(aliases);
  }

  std::map<std::string, std::string> remap;
  if (options.merge_duplicates) {
    auto outcome = merge_aliases(std::move(entities));
    for (const auto& record : outcome.log) remap[record.absorbed] = record.kept;
    entities = std::move(outcome.entities);
    store.merge_log_ = std::move(outcome.log);
  }
  for (auto& e : entities) store.entities_.emplace(e.id, std::move(e));

  seen.clear();
  for (auto& p : papers) {
    if (!is_valid_id(p.id)) throw DataError("invalid paper id '" + p.id + "'");
    if (!seen.insert(p.id).second) throw DataError("duplicate paper id " + p.id);
    if (p.year < 1900 || p.year > 2100) {
      throw DataError("paper " + p.id + ": year " + std::to_string(p.year) +
                      " outside [1900, 2100]");
    }
    auto relink = [&](std::set<std::string>& ids, EntityKind expected) {
      std::set<std::string> resolved;
      for (const auto& raw : ids) {
        auto r = remap.find(raw);
        const std::string& id = r == remap.end() ? raw : r->second;
        auto it = store.entities_.find(id);
        if (it == store.entities_.end()) {
          throw DataError("dangling reference " + p.id + "→" + raw);
        }
        if (it->second.kind != expected) {
          throw DataError("paper " + p.id + " lists " + raw + " as a " +
                          std::string(to_string(expected)) + " but it is a " +
                          std::string(to_string(it->second.kind)));
        }
        resolved.insert(id);
      }
      ids = std::move(resolved);
    };
    relink(p.used_baselines, EntityKind::kBaseline);
    relink(p.used_datasets, EntityKind::kDataset);
    for (auto& section : p.sections) section.kind = options.classifier.classify(section.heading);
    store.gold_[p.id] = GoldSet{p.used_baselines, p.used_datasets};
    store.papers_.emplace(p.id, std::move(p));
  }

  // introducing_paper may name a paper outside the corpus, so it is not checked.
  store.mentions_ = resolve_mentions(store.papers_, store.entities_);
  store.index_mentions();
  return store;
}

void CorpusStore::index_mentions() {
  std::sort(mentions_.begin(), mentions_.end(), mention_less);
  mention_ranges_.clear();
  std::size_t i = 0;
  while (i < mentions_.size()) {
    std::size_t j = i;
    while (j < mentions_.size() && mentions_[j].paper_id == mentions_[i].paper_id) ++j;
    mention_ranges_.emplace(mentions_[i].paper_id, std::make_pair(i, j));
    i = j;
  }
}

bool CorpusStore::has_paper(std::string_view id) const {
  return papers_.find(std::string(id)) != papers_.end();
}

bool CorpusStore::has_entity(std::string_view id) const {
  return entities_.find(std::string(id)) != entities_.end();
}

const PaperRecord& CorpusStore::paper(std::string_view id) const {
  auto it = papers_.find(std::string(id));
  if (it == papers_.end()) throw DataError("unknown paper id " + std::string(id));
  return it->second;
}

const ResourceEntity& CorpusStore::entity(std::string_view id) const {
  auto it = entities_.find(std::string(id));
  if (it == entities_.end()) throw DataError("unknown entity id " + std::string(id));
  return it->second;
}

const GoldSet& CorpusStore::gold(std::string_view paper_id) const {
  auto it = gold_.find(std::string(paper_id));
  if (it == gold_.end()) throw DataError("unknown paper id " + std::string(paper_id));
  return it->second;
}

std::span<const Mention> CorpusStore::mentions_in(std::string_view paper_id) const {
  auto it = mention_ranges_.find(paper_id);
  if (it == mention_ranges_.end()) return {};
  return std::span<const Mention>(mentions_).subspan(it->second.first,
                                                     it->second.second - it->second.first);
}

std::vector<std::string> CorpusStore::papers_mentioning(std::string_view entity_id) const {
  std::vector<std::string> out;
  for (const auto& m : mentions_) {
    if (m.entity_id == entity_id && (out.empty() || out.back() != m.paper_id)) {
      out.push_back(m.paper_id);
    }
  }
  return out;
}

std::vector<std::string> CorpusStore::entity_ids(EntityKind kind) const {
  std::vector<std::string> out;
  for (const auto& [id, e] : entities_) {
    if (e.kind == kind) out.push_back(id);
  }
  return out;
}

CorpusStore CorpusStore::with_mentions(std::vector<Mention> mentions) const {
  CorpusStore copy = *this;
  copy.mentions_ = std::move(mentions);
  copy.index_mentions();
  copy.check_integrity();
  return copy;
}

void CorpusStore::check_integrity() const {
  for (const auto& [id, p] : papers_) {
    for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
      for (const auto& e : p.uses(kind)) {
        auto it = entities_.find(e);
        if (it == entities_.end()) throw DataError("dangling reference " + id + "→" + e);
        if (it->second.kind != kind) throw DataError("kind mismatch " + id + "→" + e);
      }
    }
    auto g = gold_.find(id);
    if (g == gold_.end() || g->second.baselines != p.used_baselines ||
        g->second.datasets != p.used_datasets) {
      throw DataError("gold set of " + id + " does not mirror its usage lists");
    }
  }
  if (gold_.size() != papers_.size()) throw DataError("gold sets reference unknown papers");
  for (const auto& m : mentions_) {
    auto p = papers_.find(m.paper_id);
    if (p == papers_.end()) throw DataError("mention of unknown paper " + m.paper_id);
    if (!entities_.contains(m.entity_id)) throw DataError("mention of unknown entity " + m.entity_id);
    const auto& sections = p->second.sections;
    if (m.section_index < 0 || static_cast<std::size_t>(m.section_index) >= sections.size() ||
        m.sentence_index < 0 ||
        static_cast<std::size_t>(m.sentence_index) >=
            sections[static_cast<std::size_t>(m.section_index)].sentences.size()) {
      throw DataError("mention in " + m.paper_id + " addresses a missing sentence");
    }
  }
}

// ---------------------------------------------------------------------------
// Line-delimited I/O

namespace {

const json& require(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw DataError(std::string("missing field '") + field + "'");
  return *it;
}

std::set<std::string> string_set(const json& array) {
  std::set<std::string> out;
  for (const auto& v : array) out.insert(v.get<std::string>());
  return out;
}

PaperRecord paper_from_json(const json& r) {
  PaperRecord p;
  p.id = require(r, "id").get<std::string>();
  p.title = r.value("title", "");
  p.abstract = r.value("abstract", "");
  p.venue = r.value("venue", "");
  p.year = require(r, "year").get<int>();
  if (auto it = r.find("sections"); it != r.end()) {
    for (const auto& s : *it) {
      Section section;
      section.heading = require(s, "heading").get<std::string>();
      section.sentences = s.value("sentences", std::vector<std::string>{});
      p.sections.push_back(std::move(section));
    }
  }
  if (auto it = r.find("baselines"); it != r.end()) p.used_baselines = string_set(*it);
  if (auto it = r.find("datasets"); it != r.end()) p.used_datasets = string_set(*it);
  return p;
}

ResourceEntity entity_from_json(const json& r) {
  ResourceEntity e;
  e.id = require(r, "id").get<std::string>();
  e.kind = parse_entity_kind(require(r, "kind").get<std::string>());
  e.canonical_name = require(r, "name").get<std::string>();
  if (auto it = r.find("aliases"); it != r.end()) e.aliases = string_set(*it);
  e.description = r.value("description", "");
  if (auto it = r.find("introducing_paper"); it != r.end() && !it->is_null()) {
    e.introducing_paper = it->get<std::string>();
  }
  if (auto it = r.find("repo"); it != r.end() && !it->is_null()) e.repo = it->get<std::string>();
  if (auto it = r.find("year"); it != r.end() && !it->is_null()) e.year = it->get<int>();
  return e;
}

json to_json(const ResourceEntity& e) {
  json j{{"type", "entity"},
         {"id", e.id},
         {"kind", std::string(to_string(e.kind))},
         {"name", e.canonical_name},
         {"aliases", e.aliases},
         {"description", e.description}};
  if (e.introducing_paper) j["introducing_paper"] = *e.introducing_paper;
  if (e.repo) j["repo"] = *e.repo;
  if (e.year) j["year"] = *e.year;
  return j;
}

json to_json(const PaperRecord& p) {
  json sections = json::array();
  for (const auto& s : p.sections) {
    sections.push_back({{"heading", s.heading}, {"sentences", s.sentences}});
  }
  return json{{"type", "paper"},        {"id", p.id},
              {"title", p.title},       {"abstract", p.abstract},
              {"venue", p.venue},       {"year", p.year},
              {"sections", sections},   {"baselines", p.used_baselines},
              {"datasets", p.used_datasets}};
}

}  // namespace

CorpusStore parse_corpus(std::istream& in, const IngestOptions& options) {
  std::vector<PaperRecord> papers;
  std::vector<ResourceEntity> entities;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json record = json::parse(line);
      if (!record.is_object()) throw DataError("record is not an object");
      const auto type = require(record, "type").get<std::string>();
      if (type == "paper") {
        papers.push_back(paper_from_json(record));
      } else if (type == "entity") {
        entities.push_back(entity_from_json(record));
      } else {
        throw DataError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw DataError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return CorpusStore::build(std::move(papers), std::move(entities), options);
}

CorpusStore ingest_corpus(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_corpus(in, options);
}

void write_corpus(std::span<const PaperRecord> papers, std::span<const ResourceEntity> entities,
                  std::ostream& out) {
  for (const auto& e : entities) out << to_json(e).dump() << '\n';
  for (const auto& p : papers) out << to_json(p).dump() << '\n';
}

void write_mentions(std::span<const Mention> mentions, std::ostream& out) {
  for (const auto& m : mentions) {
    out << json{{"paper", m.paper_id},
                {"entity", m.entity_id},
                {"section", m.section_index},
                {"sentence", m.sentence_index},
                {"surface", m.surface_form}}
               .dump()
        << '\n';
  }
}

std::vector<Mention> read_mentions(std::istream& in) {
  std::vector<Mention> mentions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json r = json::parse(line);
      mentions.push_back({require(r, "paper").get<std::string>(),
                          require(r, "entity").get<std::string>(),
                          require(r, "section").get<int>(), require(r, "sentence").get<int>(),
                          r.value("surface", "")});
    } catch (const json::exception& e) {
      throw DataError("malformed mention at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return mentions;
}

void export_corpus(const CorpusStore& store, std::ostream& out) {
  for (const auto& [id, e] : store.entities()) out << to_json(e).dump() << '\n';
  for (const auto& [id, p] : store.papers()) out << to_json(p).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Rule filter

std::string_view to_string(FilterDecision decision) {
  switch (decision) {
    case FilterDecision::kKeep: return "keep";
    case FilterDecision::kBorderline: return "borderline";
    case FilterDecision::kDrop: return "drop";
  }
  return "drop";
}

MentionStats compute_mention_stats(const CorpusStore& store) {
  std::map<std::string, std::set<std::string>> alias_owners;
  for (const auto& [id, e] : store.entities()) {
    for (const auto& alias : e.aliases) alias_owners[alias].insert(id);
  }
  MentionStats stats;
  for (const auto& [id, e] : store.entities()) stats.emplace(id, EntityMentionStats{});
  for (const auto& m : store.mentions()) {
    auto& s = stats[m.entity_id];
    ++s.total;
    const auto& section =
        store.paper(m.paper_id).sections[static_cast<std::size_t>(m.section_index)];
    if (section.kind == SectionKind::kExperimentCentric) ++s.experiment;
    auto owners = alias_owners.find(m.surface_form);
    if (owners == alias_owners.end() || owners->second.size() != 1) s.consistent_naming = false;
  }
  return stats;
}

FilterDecision rule_filter(const Mention& mention, const MentionStats& stats,
                           const RuleFilterConfig& config) {
  auto it = stats.find(mention.entity_id);
  if (it == stats.end()) throw DataError("rule_filter: unknown entity id " + mention.entity_id);
  const auto& s = it->second;
  if (s.experiment == 0) return FilterDecision::kDrop;
  if (s.total >= config.min_mentions && s.experiment >= config.min_experiment_mentions &&
      s.consistent_naming) {
    return FilterDecision::kKeep;
  }
  return FilterDecision::kBorderline;
}

FilterReport filter_mentions(const CorpusStore& store, const RuleFilterConfig& config,
                             const MentionVerifier& verifier) {
  const auto stats = compute_mention_stats(store);
  FilterReport report;
  for (const auto& m : store.mentions()) {
    switch (rule_filter(m, stats, config)) {
      case FilterDecision::kKeep:
        ++report.keep;
        report.kept.push_back(m);
        break;
      case FilterDecision::kDrop:
        ++report.drop;
        break;
      case FilterDecision::kBorderline: {
        bool approved = true;
        if (verifier) {
          const auto& sentence = store.paper(m.paper_id)
                                     .sections[static_cast<std::size_t>(m.section_index)]
                                     .sentences[static_cast<std::size_t>(m.sentence_index)];
          approved = verifier(m, store.entity(m.entity_id), sentence);
        }
        if (approved) {
          ++report.borderline_approved;
          report.kept.push_back(m);
        } else {
          ++report.borderline_rejected;
        }
        break;
      }
    }
  }
  return report;
}

}  // namespace chainrec
