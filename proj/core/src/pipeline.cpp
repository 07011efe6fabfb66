#include "chainrec/pipeline.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "chainrec/error.hpp"
#include "chainrec/providers.hpp"

namespace chainrec {

std::string_view to_string(RetrievalMethod method) {
  return method == RetrievalMethod::kDense ? "dense" : "bm25";
}

RetrievalMethod parse_retrieval_method(std::string_view text) {
  if (text == "dense") return RetrievalMethod::kDense;
  if (text == "bm25") return RetrievalMethod::kBm25;
  throw UsageError("unknown retrieval method '" + std::string(text) + "'");
}

void PipelineConfig::validate() const {
  if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
  if (shortlist_size < 1) throw UsageError("shortlist size must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("alpha must lie in [0, 1]");
  if (!representation.use_description && !representation.use_perception) {
    throw UsageError("at least one representation segment (description or perception) must be on");
  }
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const std::size_t count = std::min(jobs, n);
  workers.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<TargetRepresentation> build_representations(const CorpusStore& store,
                                                        const PerceptionMap& perceptions,
                                                        EntityKind kind,
                                                        RepresentationToggles toggles) {
  std::vector<TargetRepresentation> out;
  for (const auto& id : store.entity_ids(kind)) {
    auto it = perceptions.find(id);
    const CollectivePerception cp =
        it != perceptions.end() ? it->second : CollectivePerception{id, "", 0, {}};
    out.push_back(build_target_representation(store.entity(id), cp, toggles));
  }
  return out;
}

PerceptionMap build_perceptions(const CorpusStore& store, Provider* summarizer, int radius,
                                const ExtractiveOptions& options,
                                const std::set<std::string>& excluded_papers, std::size_t jobs) {
  std::vector<std::string> ids;
  for (const auto& [id, e] : store.entities()) ids.push_back(id);
  std::vector<CollectivePerception> results(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    results[i] = synthesize_perception(pool_contexts(store, ids[i], radius, excluded_papers),
                                       summarizer, options);
  });
  PerceptionMap out;
  for (auto& cp : results) out.emplace(cp.entity_id, std::move(cp));
  return out;
}

KindIndex Pipeline::build_kind_index(const CorpusStore& store, const PerceptionMap& perceptions,
                                     Provider& provider, EntityKind kind,
                                     RepresentationToggles toggles) {
  KindIndex index;
  index.representations = build_representations(store, perceptions, kind, toggles);
  std::vector<std::string> ids, texts;
  for (const auto& r : index.representations) {
    ids.push_back(r.entity_id);
    texts.push_back(r.text);
  }
  if (!texts.empty()) index.dense = DenseIndex(std::move(ids), embed_texts(texts, provider));
  return index;
}

Pipeline::Pipeline(const CorpusStore& store, const PerceptionMap& perceptions, Provider& provider,
                   PipelineConfig config, std::optional<AdapterParams> adapter)
    : Pipeline(store, perceptions, provider, std::move(config), std::map<EntityKind, DenseIndex>{},
               std::move(adapter)) {}

Pipeline::Pipeline(const CorpusStore& store, const PerceptionMap& perceptions, Provider& provider,
                   PipelineConfig config, std::map<EntityKind, DenseIndex> prebuilt,
                   std::optional<AdapterParams> adapter)
    : store_(store),
      perceptions_(perceptions),
      provider_(provider),
      config_(std::move(config)),
      adapter_(std::move(adapter)),
      graph_(build_graph(store)) {
  config_.validate();
  if (adapter_) adapter_->validate();
  finish(std::move(prebuilt));
}

void Pipeline::finish(std::map<EntityKind, DenseIndex> prebuilt) {
  for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
    KindIndex index;
    auto pre = prebuilt.find(kind);
    if (pre != prebuilt.end()) {
      index.representations =
          build_representations(store_, perceptions_, kind, config_.representation);
      std::vector<std::string> expected;
      for (const auto& r : index.representations) expected.push_back(r.entity_id);
      if (pre->second.ids() != expected) {
        throw DataError("prebuilt " + std::string(to_string(kind)) +
                        " index does not match the corpus entities");
      }
      index.dense = std::move(pre->second);
    } else {
      index = build_kind_index(store_, perceptions_, provider_, kind, config_.representation);
    }

    if (adapter_ && !index.dense.empty()) {
      if (index.dense.dim() != adapter_->dim()) {
        throw DataError("adapter dim " + std::to_string(adapter_->dim()) + " != embedding dim " +
                        std::to_string(index.dense.dim()));
      }
      std::vector<EmbeddingVector> rows;
      for (std::size_t i = 0; i < index.dense.size(); ++i) {
        const auto row = index.dense.row(i);
        const std::vector<double> x(row.begin(), row.end());
        const auto h = apply_adapter(*adapter_, x);
        rows.push_back({std::vector<float>(h.begin(), h.end())});
      }
      index.dense = DenseIndex(index.dense.ids(), rows);
    }
    bm25_.emplace(kind, Bm25Index(index.representations));
    indexes_.emplace(kind, std::move(index));
  }
}

EmbeddingVector Pipeline::embed_query(const Query& query) const {
  auto vec = embed_texts({format_query(query)}, provider_).front();
  if (!adapter_) return vec;
  const std::vector<double> x(vec.values.begin(), vec.values.end());
  const auto h = apply_adapter(*adapter_, x);
  return {std::vector<float>(h.begin(), h.end())};
}

RankedList Pipeline::stage1(const Query& query, EntityKind kind, std::size_t depth) const {
  if (config_.method == RetrievalMethod::kBm25) {
    return bm25_.at(kind).search(query.synopsis_text, depth, query.query_id);
  }
  const auto& index = indexes_.at(kind).dense;
  if (index.empty()) return {query.query_id, {}};
  return dense_search(index, embed_query(query), depth, config_.temperature, query.query_id);
}

Recommendation Pipeline::recommend(const Query& query, EntityKind kind, std::size_t depth) const {
  Recommendation rec;
  rec.stage1 = stage1(query, kind, std::max(depth, config_.shortlist_size));
  if (!config_.rerank || rec.stage1.entries.empty()) {
    rec.ranking = rec.stage1;
    if (rec.ranking.entries.size() > depth) rec.ranking.entries.resize(depth);
    return rec;
  }

  RankedList shortlist{rec.stage1.query_id, {}};
  const std::size_t head = std::min(config_.shortlist_size, rec.stage1.entries.size());
  shortlist.entries.assign(rec.stage1.entries.begin(),
                           rec.stage1.entries.begin() + static_cast<std::ptrdiff_t>(head));

  EvidenceBundle bundle =
      config_.use_chains
          ? assemble_evidence(query, kind, shortlist, graph_, store_, config_.chains_per_candidate)
          : EvidenceBundle{query, kind, shortlist, {}};
  auto result = rerank(bundle, store_, config_.llm_rerank ? &provider_ : nullptr,
                       RerankOptions{config_.alpha});

  rec.ranking = std::move(result.ranking);
  if (head < rec.stage1.entries.size()) {
    // Keep the stage-1 tail below the reranked head with its spacing intact.
    const double floor = rec.ranking.entries.back().score;
    const double tail_top = rec.stage1.entries[head].score;
    for (std::size_t i = head; i < rec.stage1.entries.size(); ++i) {
      const auto& e = rec.stage1.entries[i];
      rec.ranking.entries.push_back(
          {e.entity_id, floor - 1.0 - (tail_top - e.score), static_cast<int>(i + 1)});
    }
  }
  if (rec.ranking.entries.size() > depth) rec.ranking.entries.resize(depth);
  rec.evidence = std::move(bundle);
  rec.mode = result.mode;
  rec.justification = std::move(result.justification);
  return rec;
}

}  // namespace chainrec
