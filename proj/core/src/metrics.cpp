#include "chainrec/metrics.hpp"

#include <algorithm>

#include "chainrec/error.hpp"

namespace chainrec {

namespace {

std::size_t hits_in_top_k(const RankedList& ranked, const std::set<std::string>& gold,
                          std::size_t k) {
  const std::size_t n = std::min(k, ranked.entries.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += gold.count(ranked.entries[i].entity_id);
  return hits;
}

void check_args(const std::set<std::string>& gold, std::size_t k) {
  if (gold.empty()) throw DataError("undefined recall: empty gold set");
  if (k < 1) throw UsageError("k must be >= 1");
}

}  // namespace

double recall_at_k(const RankedList& ranked, const std::set<std::string>& gold, std::size_t k) {
  check_args(gold, k);
  return static_cast<double>(hits_in_top_k(ranked, gold, k)) / static_cast<double>(gold.size());
}

int hitrate_at_k(const RankedList& ranked, const std::set<std::string>& gold, std::size_t k) {
  check_args(gold, k);
  return hits_in_top_k(ranked, gold, k) > 0 ? 1 : 0;
}

}  // namespace chainrec
