#pragma once

#include <set>
#include <string>

#include "chainrec/retrieval.hpp"

namespace chainrec {

/// |gold ∩ top-k| / |gold|. Throws DataError("undefined recall") for an
/// empty gold set and UsageError for k < 1.
double recall_at_k(const RankedList& ranked, const std::set<std::string>& gold, std::size_t k);

/// 1 when any gold item is in the top k, else 0.
int hitrate_at_k(const RankedList& ranked, const std::set<std::string>& gold, std::size_t k);

}  // namespace chainrec
