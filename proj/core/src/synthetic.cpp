#include "chainrec/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include "chainrec/error.hpp"
#include "chainrec/text.hpp"

namespace chainrec {

std::string_view to_string(PlantRule rule) {
  switch (rule) {
    case PlantRule::kNone: return "none";
    case PlantRule::kDescriptionSignature: return "description";
    case PlantRule::kContextSignature: return "context";
  }
  return "none";
}

PlantRule parse_plant_rule(std::string_view text) {
  if (text == "none") return PlantRule::kNone;
  if (text == "description") return PlantRule::kDescriptionSignature;
  if (text == "context") return PlantRule::kContextSignature;
  throw UsageError("unknown plant rule '" + std::string(text) + "' (none|description|context)");
}

std::string signature_token(std::string_view entity_id) {
  return "sig" + case_fold(entity_id);
}

namespace {

// Topic vocabularies. Kept free of the words used by the default query
// instruction so planted signals are not diluted.
constexpr std::array<std::array<const char*, 8>, 8> kTopicWords{{
    {"graph", "node", "edge", "message", "propagation", "neighborhood", "spectral", "subgraph"},
    {"image", "pixel", "convolution", "segmentation", "detection", "visual", "patch", "resolution"},
    {"token", "sentence", "translation", "syntax", "lexical", "corpus", "parsing", "dialogue"},
    {"audio", "acoustic", "phoneme", "waveform", "speaker", "spectrogram", "prosody", "utterance"},
    {"reward", "policy", "agent", "episode", "exploration", "trajectory", "control", "planning"},
    {"pruning", "quantization", "sparsity", "distillation", "latency", "footprint", "compact", "memory"},
    {"user", "item", "preference", "click", "session", "rating", "interaction", "collaborative"},
    {"protein", "molecule", "gene", "sequence", "cell", "drug", "structure", "enzyme"},
}};

constexpr std::array<const char*, 10> kVenues{"NeurIPS", "ICML", "ICLR", "ACL",  "CVPR",
                                              "KDD",     "AAAI", "IJCAI", "EMNLP", "WWW"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo + 1))); }

 private:
  std::mt19937_64 engine_;
};

std::string word(std::size_t topic, std::size_t i) {
  return kTopicWords[topic % kTopicWords.size()][i % 8];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string make_id(char prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

struct EntityInfo {
  std::size_t topic;
  std::string name;
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticParams& params) {
  if (params.entities < 2) throw UsageError("synthetic corpus needs at least 2 entities");
  if (params.topics < 1) throw UsageError("synthetic corpus needs at least 1 topic");
  if (params.density < 0.0 || params.density > 1.0) throw UsageError("density must lie in [0, 1]");
  if (params.first_year > params.last_year) throw UsageError("first_year > last_year");

  Rng rng(params.seed);
  SyntheticCorpus corpus;
  const auto baselines = std::clamp<std::size_t>(
      static_cast<std::size_t>(static_cast<double>(params.entities) * params.baseline_fraction + 0.5),
      1, params.entities - 1);
  const std::size_t datasets = params.entities - baselines;
  const bool plant_description = params.plant == PlantRule::kDescriptionSignature;
  const bool plant_context = params.plant == PlantRule::kContextSignature;

  std::vector<EntityInfo> info;
  for (std::size_t i = 0; i < params.entities; ++i) {
    const bool is_baseline = i < baselines;
    const std::size_t local = is_baseline ? i + 1 : i - baselines + 1;
    const std::size_t topic = (local - 1) % params.topics;
    ResourceEntity e;
    e.id = make_id(is_baseline ? 'b' : 'd', local, 3);
    e.kind = is_baseline ? EntityKind::kBaseline : EntityKind::kDataset;
    const std::string stem = capitalize(word(topic, rng.below(8)));
    const std::string name = stem + (is_baseline ? "Net-" : "Bench-") + std::to_string(local);
    e.canonical_name = name;
    e.aliases = {name, stem + (is_baseline ? "Net" : "Bench") + std::to_string(local)};
    if (plant_context) {
      e.description = "A research resource.";
    } else {
      e.description = name + (is_baseline ? " is an approach for " : " is a benchmark for ") +
                      word(topic, rng.below(8)) + " " + word(topic, rng.below(8)) + " and " +
                      word(topic, rng.below(8)) + ".";
      if (plant_description) e.description += " Signature " + signature_token(e.id) + ".";
    }
    e.year = rng.between(params.first_year - 5, params.last_year);
    info.push_back({topic, name});
    corpus.entities.push_back(std::move(e));
  }
  (void)datasets;

  const double affinity = std::clamp(params.topic_affinity, 0.0, 1.0);
  const double topics = static_cast<double>(params.topics);
  for (std::size_t p = 0; p < params.papers; ++p) {
    PaperRecord paper;
    paper.id = make_id('P', p + 1, 4);
    const std::size_t topic = rng.below(params.topics);
    paper.venue = kVenues[rng.below(kVenues.size())];
    paper.year = rng.between(params.first_year, params.last_year);
    paper.title = capitalize(word(topic, rng.below(8))) + " " + word(topic, rng.below(8)) +
                  " with " + word(topic, rng.below(8)) + " " + word(topic, rng.below(8));

    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < params.entities; ++i) {
      const double same = info[i].topic == topic ? 1.0 : 0.0;
      const double prob = std::min(1.0, params.density * ((1.0 - affinity) + affinity * topics * same));
      if (rng.uniform() < prob) used.push_back(i);
    }
    auto ensure_kind = [&](bool want_baseline) {
      const auto has = std::any_of(used.begin(), used.end(),
                                   [&](std::size_t i) { return (i < baselines) == want_baseline; });
      if (has) return;
      const std::size_t lo = want_baseline ? 0 : baselines;
      const std::size_t hi = want_baseline ? baselines : params.entities;
      std::vector<std::size_t> same_topic;
      for (std::size_t i = lo; i < hi; ++i) {
        if (info[i].topic == topic) same_topic.push_back(i);
      }
      used.push_back(same_topic.empty() ? lo + rng.below(hi - lo)
                                        : same_topic[rng.below(same_topic.size())]);
    };
    ensure_kind(true);
    ensure_kind(false);
    std::sort(used.begin(), used.end());

    for (auto i : used) {
      (i < baselines ? paper.used_baselines : paper.used_datasets).insert(corpus.entities[i].id);
    }

    paper.abstract = "We study " + word(topic, rng.below(8)) + " " + word(topic, rng.below(8)) +
                     " for " + word(topic, rng.below(8)) + " " + word(topic, rng.below(8)) +
                     ". Our approach improves " + word(topic, rng.below(8)) + " " +
                     word(topic, rng.below(8)) + ".";
    if (params.plant != PlantRule::kNone) {
      std::vector<std::string> sigs;
      for (auto i : used) sigs.push_back(signature_token(corpus.entities[i].id));
      paper.abstract += " Key ingredients: " + join(sigs, " ") + ".";
    }

    auto filler = [&] {
      return "This " + word(topic, rng.below(8)) + " setting stresses " +
             word(topic, rng.below(8)) + " " + word(topic, rng.below(8)) + ".";
    };

    Section intro{"Introduction", SectionKind::kOther, {}};
    for (int s = 0; s < 3; ++s) intro.sentences.push_back(filler());

    Section related{"Related Work", SectionKind::kOther, {}};
    related.sentences.push_back(filler());
    // Cite one entity the paper does not use.
    const std::size_t cited = rng.below(params.entities);
    if (!std::binary_search(used.begin(), used.end(), cited)) {
      related.sentences.push_back("Prior work such as " + info[cited].name + " explored " +
                                  word(info[cited].topic, rng.below(8)) + ".");
    }
    related.sentences.push_back(filler());

    Section experiments{"Experiments", SectionKind::kOther, {}};
    experiments.sentences.push_back(filler());
    for (auto i : used) {
      const bool is_baseline = i < baselines;
      std::string sentence = is_baseline
                                 ? "We compare against " + info[i].name + " on " +
                                       word(topic, rng.below(8)) + " " + word(topic, rng.below(8))
                                 : "We evaluate on " + info[i].name + " to measure " +
                                       word(topic, rng.below(8)) + " " + word(topic, rng.below(8));
      if (plant_context) sentence += " " + signature_token(corpus.entities[i].id);
      experiments.sentences.push_back(sentence + ".");
      experiments.sentences.push_back(filler());
    }

    Section conclusion{"Conclusion", SectionKind::kOther, {filler()}};
    paper.sections = {std::move(intro), std::move(related), std::move(experiments),
                      std::move(conclusion)};
    corpus.papers.push_back(std::move(paper));
  }
  return corpus;
}

void write_corpus(const SyntheticCorpus& corpus, std::ostream& out) {
  write_corpus(corpus.papers, corpus.entities, out);
}

}  // namespace chainrec
