#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainrec/corpus.hpp"
#include "chainrec/perception.hpp"

namespace chainrec {

class Provider;

inline constexpr std::string_view kDefaultInstruction =
    "Given a research idea, retrieve relevant baseline methods or datasets that are most "
    "suitable.";

struct Query {
  std::string query_id;
  std::optional<std::string> source_paper_id;
  std::string synopsis_text;
  std::string task_instruction{kDefaultInstruction};
  /// Resources a free-text query declares it already uses; they anchor
  /// interaction chains when there is no source paper.
  std::set<std::string> anchor_baselines;
  std::set<std::string> anchor_datasets;
};

/// Query for a corpus paper: the abstract is the synopsis and the paper's
/// own usage lists anchor its chains.
Query query_from_paper(const PaperRecord& paper,
                       std::string instruction = std::string(kDefaultInstruction));

/// "Instruct: " + instruction + " Query: " + synopsis. Candidates are never
/// formatted this way.
std::string format_query(const Query& query);

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
};

/// L2-normalizes; throws DataError("degenerate embedding") for a zero or
/// non-finite vector.
EmbeddingVector normalize_embedding(std::vector<float> values);

/// Embeds through the provider and normalizes locally. Throws ProviderError
/// on transport failure or when dimensions differ within the batch.
std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts,
                                         Provider& provider);

struct RankedEntry {
  std::string entity_id;
  double score = 0.0;
  int rank = 0;  // 1-based
};

struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;

  std::vector<std::string> ids() const;
};

/// Top k of the scored items by score desc, entity id asc; ranks from 1.
RankedList make_ranked_list(std::string query_id,
                            std::vector<std::pair<std::string, double>> scored, std::size_t k);

/// Throws DataError when scores increase, ranks skip or ids repeat.
void check_ranked_list(const RankedList& list);

/// Brute-force inner-product index over unit-norm rows.
class DenseIndex {
 public:
  DenseIndex() = default;
  /// Rows must share one dimension and be unit-norm within 1e-4.
  DenseIndex(std::vector<std::string> ids, const std::vector<EmbeddingVector>& rows);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(matrix_).subspan(i * dim_, dim_);
  }

  /// Layout: u32 dim, u32 count, then per id a u32 byte length and the
  /// bytes, then count*dim float32 row-major. Little-endian throughout.
  void save(const std::filesystem::path& path) const;
  static DenseIndex load(const std::filesystem::path& path);

  friend bool operator==(const DenseIndex&, const DenseIndex&) = default;

 private:
  std::vector<std::string> ids_;
  std::vector<float> matrix_;
  std::size_t dim_ = 0;
};

/// Scores every row by temperature * <row, query> and returns the top k.
/// An empty index gives an empty list.
RankedList dense_search(const DenseIndex& index, const EmbeddingVector& query, std::size_t k,
                        double temperature, std::string query_id = {});

/// Stage-1 shortlist handed to the reranker.
RankedList retrieve_shortlist(const DenseIndex& index, const EmbeddingVector& query,
                              std::size_t k = 20, double temperature = 20.0,
                              std::string query_id = {});

/// Okapi BM25 over tokenize()d documents.
class Bm25Index {
 public:
  struct Params {
    double k1 = 1.2;
    double b = 0.75;
  };

  Bm25Index(const std::vector<TargetRepresentation>& documents, Params params);
  explicit Bm25Index(const std::vector<TargetRepresentation>& documents)
      : Bm25Index(documents, Params{}) {}

  /// Zero-score documents are left out. Throws DataError when the query has
  /// no tokens.
  RankedList search(std::string_view query_text, std::size_t k, std::string query_id = {}) const;

  std::size_t size() const { return ids_.size(); }

 private:
  Params params_;
  std::vector<std::string> ids_;
  std::vector<std::size_t> lengths_;
  double avg_length_ = 0.0;
  std::map<std::string, std::vector<std::pair<std::size_t, int>>, std::less<>> postings_;
};

RankedList bm25_search(const std::vector<TargetRepresentation>& representations,
                       std::string_view query_text, std::size_t k);

}  // namespace chainrec
