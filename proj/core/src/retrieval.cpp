#include "chainrec/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "chainrec/error.hpp"
#include "chainrec/providers.hpp"
#include "chainrec/text.hpp"

namespace chainrec {

Query query_from_paper(const PaperRecord& paper, std::string instruction) {
  Query q;
  q.query_id = paper.id;
  q.source_paper_id = paper.id;
  q.synopsis_text = paper.abstract.empty() ? paper.title : paper.abstract;
  q.task_instruction = std::move(instruction);
  q.anchor_baselines = paper.used_baselines;
  q.anchor_datasets = paper.used_datasets;
  return q;
}

std::string format_query(const Query& query) {
  return "Instruct: " + query.task_instruction + " Query: " + query.synopsis_text;
}

EmbeddingVector normalize_embedding(std::vector<float> values) {
  double sq = 0.0;
  for (float v : values) sq += static_cast<double>(v) * v;
  if (!(sq > 0.0) || !std::isfinite(sq)) throw DataError("degenerate embedding (zero norm)");
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& v : values) v = static_cast<float>(v * inv);
  return {std::move(values)};
}

std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts,
                                         Provider& provider) {
  auto raw = provider.embed(texts);
  if (raw.size() != texts.size()) {
    throw ProviderError("embedding provider returned " + std::to_string(raw.size()) +
                            " vectors for " + std::to_string(texts.size()) + " texts",
                        false);
  }
  std::vector<EmbeddingVector> out;
  out.reserve(raw.size());
  for (auto& v : raw) {
    if (!out.empty() && v.size() != out.front().dim()) {
      throw ProviderError("embedding dimension mismatch within batch", false);
    }
    out.push_back(normalize_embedding(std::move(v)));
  }
  return out;
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.entity_id);
  return out;
}

RankedList make_ranked_list(std::string query_id,
                            std::vector<std::pair<std::string, double>> scored, std::size_t k) {
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    better);
  RankedList list{std::move(query_id), {}};
  list.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    list.entries.push_back({std::move(scored[i].first), scored[i].second, static_cast<int>(i + 1)});
  }
  return list;
}

void check_ranked_list(const RankedList& list) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    if (e.rank != static_cast<int>(i + 1)) throw DataError("ranked list: ranks not contiguous");
    if (!seen.insert(e.entity_id).second) throw DataError("ranked list: duplicate " + e.entity_id);
    if (i > 0 && e.score > list.entries[i - 1].score) {
      throw DataError("ranked list: scores increase at rank " + std::to_string(e.rank));
    }
  }
}

// ---------------------------------------------------------------------------

DenseIndex::DenseIndex(std::vector<std::string> ids, const std::vector<EmbeddingVector>& rows)
    : ids_(std::move(ids)) {
  if (ids_.size() != rows.size()) throw DataError("dense index: id/row count mismatch");
  dim_ = rows.empty() ? 0 : rows.front().dim();
  matrix_.reserve(rows.size() * dim_);
  for (const auto& r : rows) {
    if (r.dim() != dim_) throw DataError("dense index: rows differ in dimension");
    double sq = 0.0;
    for (float v : r.values) sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) throw DataError("dense index: row is not unit-norm");
    matrix_.insert(matrix_.end(), r.values.begin(), r.values.end());
  }
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("dense index: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void DenseIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u32(out, static_cast<std::uint32_t>(ids_.size()));
  for (const auto& id : ids_) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (float v : matrix_) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw DataError("failed writing " + path.string());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dense index " + path.string());
  DenseIndex index;
  index.dim_ = get_u32(in);
  const std::uint32_t count = get_u32(in);
  index.ids_.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id(get_u32(in), '\0');
    if (!in.read(id.data(), static_cast<std::streamsize>(id.size()))) {
      throw DataError("dense index: truncated id table");
    }
    index.ids_.push_back(std::move(id));
  }
  index.matrix_.resize(static_cast<std::size_t>(count) * index.dim_);
  for (auto& v : index.matrix_) v = std::bit_cast<float>(get_u32(in));
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("dense index: trailing bytes");
  return index;
}

RankedList dense_search(const DenseIndex& index, const EmbeddingVector& query, std::size_t k,
                        double temperature, std::string query_id) {
  if (k < 1) throw UsageError("dense_search: k must be >= 1");
  if (!(temperature > 0.0)) throw UsageError("dense_search: temperature must be > 0");
  if (index.empty()) return {std::move(query_id), {}};
  if (query.dim() != index.dim()) {
    throw DataError("dense_search: query dim " + std::to_string(query.dim()) + " != index dim " +
                    std::to_string(index.dim()));
  }
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto row = index.row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) dot += static_cast<double>(row[d]) * query.values[d];
    scored.emplace_back(index.ids()[i], temperature * dot);
  }
  return make_ranked_list(std::move(query_id), std::move(scored), k);
}

RankedList retrieve_shortlist(const DenseIndex& index, const EmbeddingVector& query,
                              std::size_t k, double temperature, std::string query_id) {
  return dense_search(index, query, k, temperature, std::move(query_id));
}

// ---------------------------------------------------------------------------

Bm25Index::Bm25Index(const std::vector<TargetRepresentation>& documents, Params params)
    : params_(params) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    ids_.push_back(documents[i].entity_id);
    const auto tokens = tokenize(documents[i].text);
    lengths_.push_back(tokens.size());
    total += tokens.size();
    std::map<std::string, int> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) postings_[term].emplace_back(i, count);
  }
  avg_length_ = documents.empty() ? 0.0 : static_cast<double>(total) / documents.size();
}

RankedList Bm25Index::search(std::string_view query_text, std::size_t k,
                             std::string query_id) const {
  const auto terms = tokenize(query_text);
  if (terms.empty()) throw DataError("bm25: query has no tokens");
  const double n = static_cast<double>(ids_.size());
  std::vector<double> scores(ids_.size(), 0.0);
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    for (const auto& [doc, tf] : it->second) {
      const double norm = params_.k1 * (1.0 - params_.b + params_.b * lengths_[doc] / avg_length_);
      scores[doc] += idf * (tf * (params_.k1 + 1.0)) / (tf + norm);
    }
  }
  std::vector<std::pair<std::string, double>> scored;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > 0.0) scored.emplace_back(ids_[i], scores[i]);
  }
  return make_ranked_list(std::move(query_id), std::move(scored), k);
}

RankedList bm25_search(const std::vector<TargetRepresentation>& representations,
                       std::string_view query_text, std::size_t k) {
  return Bm25Index(representations).search(query_text, k);
}

}  // namespace chainrec
