#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chainrec/corpus.hpp"
#include "chainrec/metrics.hpp"
#include "chainrec/perception.hpp"
#include "chainrec/pipeline.hpp"

namespace chainrec {

struct EvalOptions {
  std::vector<std::size_t> recall_ks{10, 20, 30};
  std::vector<std::size_t> hit_ks{5, 10, 15};
  std::vector<EntityKind> kinds{EntityKind::kBaseline, EntityKind::kDataset};
  std::string method_label;  // defaults to a label derived from the pipeline config
  std::string fingerprint;
  std::size_t jobs = 1;
};

struct QueryMetrics {
  std::map<std::size_t, double> recall;
  std::map<std::size_t, int> hit;
};

struct EvalResult {
  std::string method;
  EntityKind kind = EntityKind::kBaseline;
  std::string fingerprint;
  std::map<std::string, QueryMetrics> per_query;
  std::map<std::size_t, double> mean_recall;
  std::map<std::size_t, double> mean_hit;
  int excluded = 0;                   // queries without gold of this kind
  std::vector<std::string> failures;  // "<paper>: <error>"
};

/// Label such as "dense+rerank" or "bm25".
std::string method_label(const PipelineConfig& config);

/// One EvalResult per requested kind. Every split paper becomes a query
/// (abstract as synopsis); papers without gold of a kind are excluded and
/// counted, and per-query errors are recorded instead of aborting.
std::vector<EvalResult> evaluate(const CorpusStore& store, const Pipeline& pipeline,
                                 const std::vector<std::string>& split, const EvalOptions& options);

struct AblationToggles {
  bool perception = true;
  bool description = true;
  bool chains = true;
  bool rerank = true;

  std::string label() const;
};

/// Every combination of the four toggles that keeps a representation segment.
std::vector<AblationToggles> all_ablations();

/// Evaluates the base configuration under each toggle set with the same
/// split and options. Throws UsageError when a toggle set disables both
/// representation segments.
std::vector<EvalResult> ablation_run(const CorpusStore& store, const PerceptionMap& perceptions,
                                     Provider& provider, const PipelineConfig& base,
                                     std::span<const AblationToggles> toggles,
                                     const std::vector<std::string>& split,
                                     const EvalOptions& options);

/// {"fingerprint", "rows": [{method, kind, metric, k, value}], "excluded", "failures"}
void write_report_json(const std::vector<EvalResult>& results, std::ostream& out);
/// Plain-text table: one row per (kind, method) with R@k and HR@k columns.
void write_report_text(const std::vector<EvalResult>& results, std::ostream& out);

/// One paper id per line; blank lines and '#' comments ignored.
std::vector<std::string> read_split(const std::filesystem::path& path);

}  // namespace chainrec
