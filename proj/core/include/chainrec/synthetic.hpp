#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chainrec/corpus.hpp"

namespace chainrec {

enum class PlantRule {
  kNone,
  /// Each entity's description carries a unique signature token and every
  /// paper's abstract lists the signatures of the entities it uses.
  kDescriptionSignature,
  /// Signatures appear in the experiment sentences mentioning an entity
  /// (so they reach its perception summary) and in the abstracts of papers
  /// using it; descriptions are uninformative.
  kContextSignature,
};

std::string_view to_string(PlantRule rule);
PlantRule parse_plant_rule(std::string_view text);

struct SyntheticParams {
  std::size_t papers = 200;
  std::size_t entities = 80;
  /// Mean probability that a paper uses a given entity.
  double density = 0.05;
  double baseline_fraction = 0.5;
  std::size_t topics = 8;
  /// 0 spreads usage uniformly; 1 concentrates it on the paper's topic.
  double topic_affinity = 0.5;
  PlantRule plant = PlantRule::kNone;
  std::uint64_t seed = 7;
  int first_year = 2015;
  int last_year = 2025;
};

struct SyntheticCorpus {
  std::vector<PaperRecord> papers;
  std::vector<ResourceEntity> entities;
};

/// Seeded generator; identical parameters give identical corpora on every
/// platform (no std:: distributions are involved). Every paper uses at
/// least one baseline and one dataset.
SyntheticCorpus generate_synthetic(const SyntheticParams& params);

/// Signature token planted for an entity id.
std::string signature_token(std::string_view entity_id);

void write_corpus(const SyntheticCorpus& corpus, std::ostream& out);

}  // namespace chainrec
