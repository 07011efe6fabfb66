#include "chainrec/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "chainrec/error.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"

namespace chainrec {

std::string method_label(const PipelineConfig& config) {
  std::string label(to_string(config.method));
  if (!config.representation.use_perception) label += "-cp";
  if (!config.representation.use_description) label += "-desc";
  if (config.rerank) {
    label += config.llm_rerank ? "+llm-rerank" : "+rerank";
    if (!config.use_chains) label += "-chains";
  }
  return label;
}

std::vector<EvalResult> evaluate(const CorpusStore& store, const Pipeline& pipeline,
                                 const std::vector<std::string>& split,
                                 const EvalOptions& options) {
  std::size_t depth = 1;
  for (auto k : options.recall_ks) depth = std::max(depth, k);
  for (auto k : options.hit_ks) depth = std::max(depth, k);

  std::vector<EvalResult> results;
  for (EntityKind kind : options.kinds) {
    EvalResult result;
    result.method = options.method_label.empty() ? method_label(pipeline.config()) : options.method_label;
    result.kind = kind;
    result.fingerprint = options.fingerprint;

    std::vector<std::string> queries;
    for (const auto& paper_id : split) {
      if (store.gold(paper_id).of(kind).empty()) {
        ++result.excluded;
      } else {
        queries.push_back(paper_id);
      }
    }

    std::vector<std::optional<QueryMetrics>> metrics(queries.size());
    std::vector<std::string> errors(queries.size());
    parallel_for(queries.size(), options.jobs, [&](std::size_t i) {
      try {
        const auto& paper = store.paper(queries[i]);
        const Query query = query_from_paper(paper, pipeline.config().instruction);
        const auto rec = pipeline.recommend(query, kind, depth);
        const auto& gold = paper.uses(kind);
        QueryMetrics m;
        for (auto k : options.recall_ks) m.recall[k] = recall_at_k(rec.ranking, gold, k);
        for (auto k : options.hit_ks) m.hit[k] = hitrate_at_k(rec.ranking, gold, k);
        metrics[i] = std::move(m);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });

    for (std::size_t i = 0; i < queries.size(); ++i) {
      if (metrics[i]) {
        result.per_query.emplace(queries[i], std::move(*metrics[i]));
      } else {
        result.failures.push_back(queries[i] + ": " + errors[i]);
      }
    }
    const double n = static_cast<double>(result.per_query.size());
    for (auto k : options.recall_ks) {
      double sum = 0.0;
      for (const auto& [q, m] : result.per_query) sum += m.recall.at(k);
      result.mean_recall[k] = n > 0 ? sum / n : 0.0;
    }
    for (auto k : options.hit_ks) {
      double sum = 0.0;
      for (const auto& [q, m] : result.per_query) sum += m.hit.at(k);
      result.mean_hit[k] = n > 0 ? sum / n : 0.0;
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::string AblationToggles::label() const {
  std::vector<std::string> off;
  if (!perception) off.emplace_back("CP");
  if (!description) off.emplace_back("description");
  if (!chains) off.emplace_back("chains");
  if (!rerank) off.emplace_back("reranker");
  return off.empty() ? "full" : "w/o " + join(off, ", ");
}

std::vector<AblationToggles> all_ablations() {
  std::vector<AblationToggles> out;
  for (int mask = 0; mask < 16; ++mask) {
    AblationToggles t{(mask & 1) == 0, (mask & 2) == 0, (mask & 4) == 0, (mask & 8) == 0};
    if (!t.perception && !t.description) continue;
    // Chains only matter when reranking.
    if (!t.rerank && !t.chains) continue;
    out.push_back(t);
  }
  return out;
}

std::vector<EvalResult> ablation_run(const CorpusStore& store, const PerceptionMap& perceptions,
                                     Provider& provider, const PipelineConfig& base,
                                     std::span<const AblationToggles> toggles,
                                     const std::vector<std::string>& split,
                                     const EvalOptions& options) {
  for (const auto& t : toggles) {
    if (!t.perception && !t.description) {
      throw UsageError("ablation '" + t.label() + "' disables both representation segments");
    }
  }
  std::vector<EvalResult> all;
  for (const auto& t : toggles) {
    PipelineConfig config = base;
    config.representation = {t.description, t.perception};
    config.use_chains = t.chains;
    config.rerank = t.rerank;
    Pipeline pipeline(store, perceptions, provider, config);
    EvalOptions opts = options;
    opts.method_label = t.label();
    auto results = evaluate(store, pipeline, split, opts);
    all.insert(all.end(), results.begin(), results.end());
  }
  return all;
}

void write_report_json(const std::vector<EvalResult>& results, std::ostream& out) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json meta = nlohmann::json::array();
  std::string fingerprint;
  for (const auto& r : results) {
    if (fingerprint.empty()) fingerprint = r.fingerprint;
    const std::string kind(to_string(r.kind));
    for (const auto& [k, v] : r.mean_recall) {
      rows.push_back({{"method", r.method}, {"kind", kind}, {"metric", "recall"}, {"k", k}, {"value", v}});
    }
    for (const auto& [k, v] : r.mean_hit) {
      rows.push_back({{"method", r.method}, {"kind", kind}, {"metric", "hitrate"}, {"k", k}, {"value", v}});
    }
    meta.push_back({{"method", r.method},
                    {"kind", kind},
                    {"queries", r.per_query.size()},
                    {"excluded", r.excluded},
                    {"failures", r.failures}});
  }
  out << nlohmann::json{{"fingerprint", fingerprint}, {"rows", rows}, {"runs", meta}}.dump(2)
      << '\n';
}

void write_report_text(const std::vector<EvalResult>& results, std::ostream& out) {
  if (results.empty()) return;
  if (!results.front().fingerprint.empty()) out << "config " << results.front().fingerprint << '\n';
  char buf[128];
  for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
    bool header = false;
    for (const auto& r : results) {
      if (r.kind != kind) continue;
      if (!header) {
        out << '\n' << to_string(kind) << " recommendation\n";
        std::snprintf(buf, sizeof buf, "%-36s", "method");
        out << buf;
        for (const auto& [k, v] : r.mean_recall) {
          std::snprintf(buf, sizeof buf, " %8s", ("R@" + std::to_string(k)).c_str());
          out << buf;
        }
        for (const auto& [k, v] : r.mean_hit) {
          std::snprintf(buf, sizeof buf, " %8s", ("HR@" + std::to_string(k)).c_str());
          out << buf;
        }
        out << "  queries excluded\n";
        header = true;
      }
      std::snprintf(buf, sizeof buf, "%-36s", r.method.c_str());
      out << buf;
      for (const auto& [k, v] : r.mean_recall) {
        std::snprintf(buf, sizeof buf, " %8.4f", v);
        out << buf;
      }
      for (const auto& [k, v] : r.mean_hit) {
        std::snprintf(buf, sizeof buf, " %8.4f", v);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "  %7zu %8d\n", r.per_query.size(), r.excluded);
      out << buf;
      for (const auto& f : r.failures) out << "  failed: " << f << '\n';
    }
  }
}

std::vector<std::string> read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    ids.emplace_back(t);
  }
  return ids;
}

}  // namespace chainrec
