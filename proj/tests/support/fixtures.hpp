#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chainrec/adapter.hpp"
#include "chainrec/corpus.hpp"
#include "chainrec/retrieval.hpp"

namespace chainrec::testing {

PaperRecord make_paper(std::string id, std::vector<std::string> baselines,
                       std::vector<std::string> datasets, int year = 2020,
                       std::string venue = "ACL");

ResourceEntity make_entity(std::string id, EntityKind kind, std::string name,
                           std::string description = "");

/// Baseline/dataset shorthand: ids starting with 'b' are baselines, 'd' datasets.
ResourceEntity make_entity(std::string id);

/// Store over papers that only carry usage lists; every referenced entity id
/// is created with make_entity(id).
CorpusStore usage_store(const std::vector<PaperRecord>& papers);

/// Two papers, three entities, one experiment section each with mentions.
std::string two_paper_fixture_text();

/// Reads a file under tests/fixtures.
std::string fixture_path(const std::string& name);

/// Small corpus with sections and mentions used by perception and CLI tests:
/// papers P1..P4, baselines b1..b3, datasets d1..d2.
std::vector<PaperRecord> perception_papers();
std::vector<ResourceEntity> perception_entities();

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Seeded random helpers built on a 64-bit Mersenne twister.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Matrix random_matrix(Random& rng, std::size_t rows, std::size_t cols, double lo, double hi);

/// B x dim random batch with binary labels.
TrainBatch random_batch(Random& rng, std::size_t batch, std::size_t dim);

/// Ranked list of `length` distinct ids drawn from e0..e<universe-1> with
/// decreasing scores.
RankedList random_ranking(Random& rng, std::size_t universe, std::size_t length);

/// Nonempty random subset of e0..e<universe-1>.
std::set<std::string> random_gold(Random& rng, std::size_t universe, std::size_t max_size);

}  // namespace chainrec::testing
