#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "chainrec/adapter.hpp"
#include "chainrec/chain_graph.hpp"
#include "chainrec/corpus.hpp"
#include "chainrec/error.hpp"
#include "chainrec/evaluate.hpp"
#include "chainrec/perception.hpp"
#include "chainrec/pipeline.hpp"
#include "chainrec/providers.hpp"
#include "chainrec/reranker.hpp"
#include "chainrec/retrieval.hpp"
#include "chainrec/synthetic.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace chainrec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kStoreFile = "store.jsonl";
constexpr const char* kMentionsFile = "mentions.jsonl";
constexpr const char* kPerceptionFile = "perception.jsonl";
constexpr const char* kIndexMetaFile = "index_meta.json";
constexpr const char* kAdapterFile = "adapter.ckpt";
constexpr const char* kLossTraceFile = "loss_trace.jsonl";

// Binds command-line flags to RunConfig fields. A flag only overrides the
// config when it was actually given, so the config file stays authoritative
// for everything else.
class Overrides {
 public:
  template <class T>
  CLI::Option* option(CLI::App& app, const std::string& names, T RunConfig::*field,
                      const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app.add_option(names, *value, help);
    apply_.push_back([opt, value, field](RunConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
    return opt;
  }

  void flag(CLI::App& app, const std::string& names, bool RunConfig::*field,
            const std::string& help) {
    auto value = std::make_shared<bool>();
    CLI::Option* opt = app.add_flag(names, *value, help);
    apply_.push_back([opt, value, field](RunConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
  }

  void apply(RunConfig& config) const {
    for (const auto& fn : apply_) fn(config);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> apply_;
};

void register_config_flags(CLI::App& app, Overrides& o) {
  o.option(app, "--corpus", &RunConfig::corpus, "Corpus file (line-delimited JSON records)");
  o.option(app, "--work-dir", &RunConfig::work_dir, "Directory holding built artifacts");
  o.option(app, "--split", &RunConfig::split, "File with one paper id per line");
  o.option(app, "--output", &RunConfig::output, "Output file for the command");
  o.option(app, "--adapter", &RunConfig::adapter, "Adapter checkpoint applied at query time");

  o.option(app, "--endpoint-base", &RunConfig::endpoint_base,
           "'mock' or the base URL of a provider sidecar");
  o.option(app, "--timeout-seconds", &RunConfig::timeout_seconds, "Provider request timeout");
  o.option(app, "--max-in-flight", &RunConfig::max_in_flight, "Concurrent provider requests");
  o.option(app, "--retries", &RunConfig::retries, "Retries for failed provider requests");
  o.option(app, "--mock-dim", &RunConfig::mock_dim, "Dimension of the mock embedding");

  o.flag(app, "--merge-duplicates,!--no-merge-duplicates", &RunConfig::merge_duplicates,
         "Merge entities sharing a normalized alias");
  o.flag(app, "--filter-mentions,!--no-filter-mentions", &RunConfig::filter_mentions,
         "Apply the rule-based mention filter at ingest");
  o.flag(app, "--verify-borderline,!--no-verify-borderline", &RunConfig::verify_borderline,
         "Send borderline mentions to the provider's verifier");
  o.option(app, "--min-mentions", &RunConfig::min_mentions, "Mentions needed to keep an entity");
  o.option(app, "--min-experiment-mentions", &RunConfig::min_experiment_mentions,
           "Experiment-section mentions needed to keep an entity");

  o.option(app, "--radius", &RunConfig::radius, "Citation-context window radius in sentences");

  o.option(app, "--method", &RunConfig::method, "Stage-1 retrieval: dense or bm25");
  o.option(app, "--temperature", &RunConfig::temperature, "Similarity temperature");
  o.option(app, "--shortlist-size", &RunConfig::shortlist_size, "Candidates passed to the reranker");
  o.option(app, "--k", &RunConfig::k, "Rows returned by query");
  o.flag(app, "--rerank,!--no-rerank", &RunConfig::rerank, "Rerank the shortlist");
  o.flag(app, "--llm-rerank,!--no-llm-rerank", &RunConfig::llm_rerank,
         "Rerank through the provider instead of the deterministic blend");
  o.flag(app, "--use-chains,!--no-chains", &RunConfig::use_chains,
         "Use interaction-chain evidence when reranking");
  o.flag(app, "--use-perception,!--no-cp", &RunConfig::use_perception,
         "Include collective perception in target representations");
  o.flag(app, "--use-description,!--no-desc", &RunConfig::use_description,
         "Include entity descriptions in target representations");
  o.option(app, "--alpha", &RunConfig::alpha, "Retrieval weight in the fallback reranker");
  o.option(app, "--chains-per-candidate", &RunConfig::chains_per_candidate,
           "Chains kept as evidence per candidate");
  o.option(app, "--instruction", &RunConfig::instruction, "Task instruction prefixed to queries");

  o.option(app, "--learning-rate", &RunConfig::learning_rate, "Adapter learning rate");
  o.option(app, "--epochs", &RunConfig::epochs, "Adapter training epochs");
  o.option(app, "--reg-weight", &RunConfig::reg_weight, "Weight of the in-batch regularizer");
  o.option(app, "--batch-size", &RunConfig::batch_size, "Adapter training batch size");

  o.option(app, "--recall-ks", &RunConfig::recall_ks, "Cutoffs for Recall@k")->delimiter(',');
  o.option(app, "--hit-ks", &RunConfig::hit_ks, "Cutoffs for HitRate@k")->delimiter(',');

  o.option(app, "--seed", &RunConfig::seed, "Random seed");
  o.option(app, "--jobs", &RunConfig::jobs, "Worker threads");
  o.option(app, "--format", &RunConfig::format, "Output format: text or json");
}

std::string safe_name(std::string_view label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '+' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

CorpusStore load_store(const RunConfig& cfg) {
  const auto path = cfg.work_path(kStoreFile);
  if (!fs::exists(path)) {
    throw UsageError("no store at " + path.string() + "; run 'chainrec ingest' first");
  }
  IngestOptions options;
  options.merge_duplicates = false;
  CorpusStore store = ingest_corpus(path, options);
  const auto mentions_path = cfg.work_path(kMentionsFile);
  if (fs::exists(mentions_path)) {
    std::ifstream in(mentions_path);
    store = store.with_mentions(read_mentions(in));
  }
  return store;
}

PerceptionMap load_perceptions(const RunConfig& cfg) {
  const auto path = cfg.work_path(kPerceptionFile);
  if (!fs::exists(path)) {
    throw UsageError("no perception cache at " + path.string() +
                     "; run 'chainrec build-perception' first");
  }
  std::ifstream in(path);
  return read_perception_cache(in);
}

std::vector<std::string> load_split(const RunConfig& cfg, const CorpusStore& store,
                                    bool required) {
  if (cfg.split.empty()) {
    if (required) throw UsageError("this command needs --split <file>");
    std::vector<std::string> all;
    for (const auto& [id, p] : store.papers()) all.push_back(id);
    return all;
  }
  auto ids = read_split(cfg.split);
  for (const auto& id : ids) {
    if (!store.has_paper(id)) throw DataError("split names unknown paper " + id);
  }
  return ids;
}

std::optional<AdapterParams> load_adapter(const RunConfig& cfg) {
  if (cfg.adapter.empty()) return std::nullopt;
  return AdapterParams::load(cfg.adapter);
}

fs::path index_path(const RunConfig& cfg, EntityKind kind) {
  return cfg.work_path("index_" + std::string(to_string(kind)) + ".bin");
}

// What the stored dense indexes were built from; a mismatch means they are
// stale for the current configuration.
json index_meta(const RunConfig& cfg) {
  const auto cache = cfg.work_path(kPerceptionFile);
  const std::string cache_hash = fs::exists(cache) ? to_hex(fnv1a64(read_file(cache))) : "";
  return json{{"endpoint_base", cfg.endpoint_base},
              {"mock_dim", cfg.mock_dim},
              {"use_description", cfg.use_description},
              {"use_perception", cfg.use_perception},
              {"perception", cache_hash}};
}

std::map<EntityKind, DenseIndex> load_prebuilt(const RunConfig& cfg, std::ostream& err) {
  std::map<EntityKind, DenseIndex> prebuilt;
  const auto meta_path = cfg.work_path(kIndexMetaFile);
  if (!fs::exists(meta_path)) return prebuilt;
  json stored;
  try {
    stored = json::parse(read_file(meta_path));
  } catch (const json::exception&) {
    stored = nullptr;
  }
  if (stored != index_meta(cfg)) {
    err << "note: stored indexes do not match this configuration; embedding in memory\n";
    return prebuilt;
  }
  for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
    const auto path = index_path(cfg, kind);
    if (fs::exists(path)) prebuilt.emplace(kind, DenseIndex::load(path));
  }
  return prebuilt;
}

std::vector<EntityKind> parse_kinds(const std::string& text) {
  if (text == "both") return {EntityKind::kBaseline, EntityKind::kDataset};
  try {
    return {parse_entity_kind(text)};
  } catch (const DataError&) {
    throw UsageError("--kind must be baseline, dataset or both");
  }
}

struct Env {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  bool json_mode() const { return cfg.format == "json"; }
};

// --- commands ---

int cmd_ingest(Env& env) {
  const auto& cfg = env.cfg;
  if (cfg.corpus.empty()) throw UsageError("ingest needs --corpus <file>");
  IngestOptions options;
  options.merge_duplicates = cfg.merge_duplicates;
  CorpusStore store = ingest_corpus(cfg.corpus, options);

  FilterReport report;
  report.keep = static_cast<int>(store.mentions().size());
  if (cfg.filter_mentions) {
    std::unique_ptr<Provider> provider;
    MentionVerifier verifier;
    if (cfg.verify_borderline) {
      provider = make_provider(cfg.provider());
      verifier = [&provider](const Mention& m, const ResourceEntity& e, std::string_view sentence) {
        return provider->verify({e.id, e.canonical_name, m.surface_form, std::string(sentence)});
      };
    }
    report = filter_mentions(store, {cfg.min_mentions, cfg.min_experiment_mentions}, verifier);
    store = store.with_mentions(report.kept);
  }

  fs::create_directories(cfg.work_dir);
  {
    auto out = open_output(cfg.work_path(kStoreFile));
    export_corpus(store, out);
  }
  {
    auto out = open_output(cfg.work_path(kMentionsFile));
    write_mentions(store.mentions(), out);
  }

  const auto baselines = store.entity_ids(EntityKind::kBaseline).size();
  const auto datasets = store.entity_ids(EntityKind::kDataset).size();
  if (env.json_mode()) {
    env.out << json{{"papers", store.papers().size()},
                    {"baselines", baselines},
                    {"datasets", datasets},
                    {"merges", store.merge_log().size()},
                    {"mentions", store.mentions().size()},
                    {"filter",
                     {{"keep", report.keep},
                      {"borderline_approved", report.borderline_approved},
                      {"borderline_rejected", report.borderline_rejected},
                      {"drop", report.drop}}},
                    {"fingerprint", fingerprint(cfg)}}
                   .dump(2)
            << '\n';
  } else {
    env.out << "ingested " << store.papers().size() << " papers, " << baselines
            << " baselines, " << datasets << " datasets\n";
    for (const auto& m : store.merge_log()) env.out << "merged " << m.absorbed << " into " << m.kept << '\n';
    env.out << "mentions kept " << store.mentions().size() << " (keep " << report.keep
            << ", borderline approved " << report.borderline_approved << ", rejected "
            << report.borderline_rejected << ", dropped " << report.drop << ")\n";
    env.out << "store written to " << cfg.work_path(kStoreFile).string() << '\n';
  }
  return kExitOk;
}

int cmd_build_perception(Env& env) {
  const auto& cfg = env.cfg;
  const CorpusStore store = load_store(cfg);
  std::set<std::string> excluded;
  if (!cfg.split.empty()) {
    // Held-out papers must not leak their usage into the representations.
    for (auto& id : load_split(cfg, store, true)) excluded.insert(std::move(id));
  }
  auto provider = make_provider(cfg.provider());
  const auto perceptions =
      build_perceptions(store, provider.get(), cfg.radius, {}, excluded, cfg.jobs);
  {
    auto out = open_output(cfg.work_path(kPerceptionFile));
    write_perception_cache(perceptions, out);
  }
  int summarized = 0, fallback = 0, empty = 0;
  for (const auto& [id, cp] : perceptions) {
    if (cp.evidence_count == 0) ++empty;
    if (cp.method == PerceptionMethod::kExternalSummarizer) ++summarized; else ++fallback;
  }
  if (env.json_mode()) {
    env.out << json{{"entities", perceptions.size()},
                    {"summarized", summarized},
                    {"fallback", fallback},
                    {"without_evidence", empty},
                    {"excluded_papers", excluded.size()},
                    {"fingerprint", fingerprint(cfg)}}
                   .dump(2)
            << '\n';
  } else {
    env.out << "perceptions for " << perceptions.size() << " entities (" << summarized
            << " summarized, " << fallback << " extractive fallback, " << empty
            << " without evidence)\n";
    if (!excluded.empty()) env.out << "excluded " << excluded.size() << " split papers\n";
  }
  return kExitOk;
}

int cmd_build_index(Env& env) {
  const auto& cfg = env.cfg;
  cfg.pipeline().validate();
  const CorpusStore store = load_store(cfg);
  const PerceptionMap perceptions = load_perceptions(cfg);
  auto provider = make_provider(cfg.provider());
  json summary = json::object();
  for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
    const auto index = Pipeline::build_kind_index(store, perceptions, *provider, kind,
                                                  {cfg.use_description, cfg.use_perception});
    index.dense.save(index_path(cfg, kind));
    summary[std::string(to_string(kind))] = {{"rows", index.dense.size()}, {"dim", index.dense.dim()}};
    if (!env.json_mode()) {
      env.out << to_string(kind) << " index: " << index.dense.size() << " rows, dim "
              << index.dense.dim() << " -> " << index_path(cfg, kind).string() << '\n';
    }
  }
  {
    auto out = open_output(cfg.work_path(kIndexMetaFile));
    out << index_meta(cfg).dump(2) << '\n';
  }
  if (env.json_mode()) {
    summary["fingerprint"] = fingerprint(cfg);
    env.out << summary.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_train_adapter(Env& env) {
  const auto& cfg = env.cfg;
  const CorpusStore store = load_store(cfg);
  const PerceptionMap perceptions = load_perceptions(cfg);
  const auto papers = load_split(cfg, store, false);
  auto provider = make_provider(cfg.provider());

  std::vector<std::string> query_texts;
  for (const auto& id : papers) query_texts.push_back(format_query(query_from_paper(store.paper(id), cfg.instruction)));
  const auto query_vecs = embed_texts(query_texts, *provider);

  std::map<std::string, std::vector<double>> target_vecs;
  for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
    const auto reps = build_representations(store, perceptions, kind,
                                            {cfg.use_description, cfg.use_perception});
    std::vector<std::string> texts;
    for (const auto& r : reps) texts.push_back(r.text);
    const auto vecs = embed_texts(texts, *provider);
    for (std::size_t i = 0; i < reps.size(); ++i) {
      target_vecs.emplace(reps[i].entity_id,
                          std::vector<double>(vecs[i].values.begin(), vecs[i].values.end()));
    }
  }

  std::vector<std::vector<double>> queries, targets;
  std::vector<std::string> query_keys, target_keys;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    const auto& paper = store.paper(papers[i]);
    for (EntityKind kind : {EntityKind::kBaseline, EntityKind::kDataset}) {
      for (const auto& e : paper.uses(kind)) {
        queries.emplace_back(query_vecs[i].values.begin(), query_vecs[i].values.end());
        targets.push_back(target_vecs.at(e));
        query_keys.push_back(paper.id);
        target_keys.push_back(e);
      }
    }
  }
  const auto batches =
      make_train_batches(queries, targets, query_keys, target_keys, cfg.batch_size, cfg.seed);
  if (batches.empty()) throw DataError("no training batches: need at least two compatible pairs");

  TrainHyper hyper;
  hyper.learning_rate = cfg.learning_rate;
  hyper.epochs = cfg.epochs;
  hyper.seed = cfg.seed;
  hyper.reg_weight = cfg.reg_weight;
  hyper.temperature = cfg.temperature;
  const auto result = train_adapter(batches, hyper);

  const fs::path ckpt = cfg.output.empty() ? cfg.work_path(kAdapterFile) : fs::path(cfg.output);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  result.params.save(ckpt);
  {
    auto out = open_output(cfg.work_path(kLossTraceFile));
    write_loss_trace(result, out);
  }
  const double final_loss = result.epoch_losses.empty() ? result.initial_loss : result.epoch_losses.back();
  if (env.json_mode()) {
    env.out << json{{"pairs", queries.size()},
                    {"batches", batches.size()},
                    {"initial_loss", result.initial_loss},
                    {"final_loss", final_loss},
                    {"checkpoint", ckpt.string()},
                    {"fingerprint", fingerprint(cfg)}}
                   .dump(2)
            << '\n';
  } else {
    char buf[160];
    std::snprintf(buf, sizeof buf, "trained on %zu pairs in %zu batches: loss %.6f -> %.6f\n",
                  queries.size(), batches.size(), result.initial_loss, final_loss);
    env.out << buf << "checkpoint written to " << ckpt.string() << '\n';
  }
  return kExitOk;
}

std::string chain_summary(const ChainEvidence* evidence) {
  if (evidence == nullptr || evidence->chains.empty()) return "-";
  const auto& c = evidence->chains.front();
  return "support " + std::to_string(evidence->total_support()) + " over " +
         std::to_string(evidence->chains.size()) + " chains; best " + c.origin_paper + " > " +
         c.bridge_entity + " > " + c.bridge_paper + " (m=" + std::to_string(c.support) + ")";
}

struct QueryFlags {
  std::string text;
  std::string paper;
  std::string kind = "both";
  std::vector<std::string> anchors;
};

int cmd_query(Env& env, const QueryFlags& flags) {
  const auto& cfg = env.cfg;
  if (flags.text.empty() == flags.paper.empty()) {
    throw UsageError("query needs exactly one of --text or --paper");
  }
  const auto kinds = parse_kinds(flags.kind);
  const CorpusStore store = load_store(cfg);
  const PerceptionMap perceptions = load_perceptions(cfg);
  auto provider = make_provider(cfg.provider());

  Query query;
  if (!flags.paper.empty()) {
    if (!store.has_paper(flags.paper)) throw DataError("unknown paper " + flags.paper);
    query = query_from_paper(store.paper(flags.paper), cfg.instruction);
  } else {
    query.query_id = "q";
    query.synopsis_text = flags.text;
    query.task_instruction = cfg.instruction;
    for (const auto& a : flags.anchors) {
      if (!store.has_entity(a)) throw DataError("unknown anchor entity " + a);
      (store.entity(a).kind == EntityKind::kBaseline ? query.anchor_baselines
                                                    : query.anchor_datasets)
          .insert(a);
    }
  }

  const Pipeline pipeline(store, perceptions, *provider, cfg.pipeline(),
                          load_prebuilt(cfg, env.err), load_adapter(cfg));

  json results = json::array();
  for (EntityKind kind : kinds) {
    const auto rec = pipeline.recommend(query, kind, cfg.k);
    const std::string mode = rec.mode ? std::string(to_string(*rec.mode)) : "retrieval-only";
    json rows = json::array();
    if (!env.json_mode()) {
      env.out << to_string(kind) << " recommendations (" << mode << ")\n";
      char buf[256];
      std::snprintf(buf, sizeof buf, "%4s  %-12s %10s  %-28s %s\n", "rank", "id", "score", "name",
                    "chains");
      env.out << buf;
    }
    for (const auto& e : rec.ranking.entries) {
      const ChainEvidence* evidence = nullptr;
      if (rec.evidence) {
        auto it = rec.evidence->per_candidate.find(e.entity_id);
        if (it != rec.evidence->per_candidate.end()) evidence = &it->second;
      }
      const auto& name = store.entity(e.entity_id).canonical_name;
      if (env.json_mode()) {
        json chains = json::array();
        if (evidence != nullptr) {
          for (const auto& c : evidence->chains) {
            chains.push_back({{"origin", c.origin_paper},
                              {"bridgeEntity", c.bridge_entity},
                              {"bridgePaper", c.bridge_paper},
                              {"support", c.support}});
          }
        }
        rows.push_back({{"rank", e.rank}, {"id", e.entity_id}, {"name", name},
                        {"score", e.score}, {"chains", chains}});
      } else {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%4d  %-12s %10.4f  %-28s %s\n", e.rank,
                      e.entity_id.c_str(), e.score, name.c_str(), chain_summary(evidence).c_str());
        env.out << buf;
      }
    }
    if (env.json_mode()) {
      results.push_back({{"kind", std::string(to_string(kind))}, {"mode", mode}, {"rows", rows}});
    } else {
      env.out << '\n';
    }
  }
  if (env.json_mode()) {
    env.out << json{{"query", query.query_id}, {"fingerprint", fingerprint(cfg)}, {"results", results}}.dump(2)
            << '\n';
  } else {
    env.out << "config " << fingerprint(cfg) << '\n';
  }
  return kExitOk;
}

int cmd_emit_sft(Env& env) {
  const auto& cfg = env.cfg;
  const CorpusStore store = load_store(cfg);
  const auto split = load_split(cfg, store, false);
  const auto graph = build_graph(store);
  SftOptions options;
  options.shortlist_cap = cfg.shortlist_size;
  options.chains_per_candidate = cfg.chains_per_candidate;
  options.instruction = cfg.instruction;
  const fs::path path = cfg.output.empty() ? cfg.work_path("sft.jsonl") : fs::path(cfg.output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto report = emit_sft_triplets(store, graph, split, path, options);
  if (env.json_mode()) {
    env.out << json{{"written", report.written},
                    {"skipped", report.skipped},
                    {"warnings", report.warnings},
                    {"output", path.string()},
                    {"fingerprint", fingerprint(cfg)}}
                   .dump(2)
            << '\n';
  } else {
    env.out << "wrote " << report.written << " triplets to " << path.string() << " (skipped "
            << report.skipped << ")\n";
    for (const auto& w : report.warnings) env.err << "warning: " << w << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(Env& env, bool ablation) {
  const auto& cfg = env.cfg;
  const CorpusStore store = load_store(cfg);
  const PerceptionMap perceptions = load_perceptions(cfg);
  const auto split = load_split(cfg, store, true);
  auto provider = make_provider(cfg.provider());

  EvalOptions options;
  options.recall_ks = cfg.recall_ks;
  options.hit_ks = cfg.hit_ks;
  options.fingerprint = fingerprint(cfg);
  options.jobs = cfg.jobs;

  std::vector<EvalResult> results;
  std::string name;
  if (ablation) {
    const auto toggles = all_ablations();
    results = ablation_run(store, perceptions, *provider, cfg.pipeline(), toggles, split, options);
    name = "ablation";
  } else {
    const Pipeline pipeline(store, perceptions, *provider, cfg.pipeline(),
                            load_prebuilt(cfg, env.err), load_adapter(cfg));
    results = evaluate(store, pipeline, split, options);
    name = "evaluate-" + safe_name(method_label(pipeline.config()));
  }

  const fs::path dir = cfg.output.empty() ? cfg.work_path("reports") : fs::path(cfg.output);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / (name + ".json"));
    write_report_json(results, out);
  }
  {
    auto out = open_output(dir / (name + ".txt"));
    write_report_text(results, out);
  }
  if (env.json_mode()) {
    write_report_json(results, env.out);
  } else {
    write_report_text(results, env.out);
    env.out << "\nreports written to " << (dir / (name + ".{json,txt}")).string() << '\n';
  }
  return kExitOk;
}

int cmd_analyze_chains(Env& env, bool with_venue) {
  const auto& cfg = env.cfg;
  const CorpusStore store = load_store(cfg);
  const auto papers = load_split(cfg, store, false);
  const auto graph = build_graph(store);
  const auto analysis = analyze_chains(graph, store, papers, with_venue);

  std::ostringstream raw;
  write_analysis_json(analysis, raw);
  json report = json::parse(raw.str());
  report["fingerprint"] = fingerprint(cfg);
  const fs::path path = cfg.output.empty() ? cfg.work_path("reports") / "chains.json" : fs::path(cfg.output);
  {
    auto out = open_output(path);
    out << report.dump(2) << '\n';
  }
  if (env.json_mode()) {
    env.out << report.dump(2) << '\n';
  } else {
    write_analysis_text(analysis, env.out);
    env.out << "config " << fingerprint(cfg) << "\nreport written to " << path.string() << '\n';
  }
  return kExitOk;
}

struct SyntheticFlags {
  SyntheticParams params;
  std::string plant = "none";
  std::string split_output;
  std::size_t split_every = 5;
};

int cmd_gen_synthetic(Env& env, SyntheticFlags flags) {
  const auto& cfg = env.cfg;
  if (cfg.output.empty()) throw UsageError("gen-synthetic needs --output <file>");
  if (flags.split_every < 1) throw UsageError("--split-every must be >= 1");
  flags.params.plant = parse_plant_rule(flags.plant);
  flags.params.seed = cfg.seed;
  const auto corpus = generate_synthetic(flags.params);
  {
    auto out = open_output(cfg.output);
    write_corpus(corpus, out);
  }
  std::size_t held_out = 0;
  if (!flags.split_output.empty()) {
    auto out = open_output(flags.split_output);
    for (std::size_t i = 0; i < corpus.papers.size(); i += flags.split_every) {
      out << corpus.papers[i].id << '\n';
      ++held_out;
    }
  }
  if (env.json_mode()) {
    env.out << json{{"papers", corpus.papers.size()},
                    {"entities", corpus.entities.size()},
                    {"split", held_out},
                    {"output", cfg.output}}
                   .dump(2)
            << '\n';
  } else {
    env.out << "generated " << corpus.papers.size() << " papers and " << corpus.entities.size()
            << " entities -> " << cfg.output << '\n';
    if (held_out > 0) env.out << "split of " << held_out << " papers -> " << flags.split_output << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"chainrec: baseline and dataset recommendation from collective perception and "
               "interaction chains"};
  app.name("chainrec");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  Overrides overrides;
  register_config_flags(app, overrides);

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus file and build the store");
  auto* perception = app.add_subcommand("build-perception", "Summarize citation contexts per entity");
  auto* index = app.add_subcommand("build-index", "Embed target representations per kind");
  auto* train = app.add_subcommand("train-adapter", "Train the linear adapter on split gold pairs");
  auto* query_cmd = app.add_subcommand("query", "Recommend baselines and datasets for a query");
  auto* sft = app.add_subcommand("emit-sft", "Write (Q, R, A) reranker training triplets");
  auto* eval = app.add_subcommand("evaluate", "Recall@k and HitRate@k over a split");
  auto* chains = app.add_subcommand("analyze-chains", "Chain candidate pool recall and precision");
  auto* gen = app.add_subcommand("gen-synthetic", "Generate a seeded synthetic corpus");
  auto* show = app.add_subcommand("show-config", "Print the effective config and its fingerprint");

  QueryFlags qflags;
  query_cmd->add_option("--text", qflags.text, "Free-text research idea");
  query_cmd->add_option("--paper", qflags.paper, "Use a corpus paper's abstract as the query");
  query_cmd->add_option("--kind", qflags.kind, "baseline, dataset or both");
  query_cmd->add_option("--anchors", qflags.anchors, "Entity ids the idea already uses")
      ->delimiter(',');

  bool ablation = false;
  eval->add_flag("--ablation", ablation, "Run every component ablation");

  bool with_venue = false;
  chains->add_flag("--with-venue", with_venue, "Add the same-venue comparison pool");

  SyntheticFlags sflags;
  gen->add_option("--papers", sflags.params.papers, "Number of papers");
  gen->add_option("--entities", sflags.params.entities, "Number of entities");
  gen->add_option("--density", sflags.params.density, "Mean usage probability");
  gen->add_option("--baseline-fraction", sflags.params.baseline_fraction, "Share of baselines");
  gen->add_option("--topics", sflags.params.topics, "Number of topics");
  gen->add_option("--topic-affinity", sflags.params.topic_affinity, "Topic concentration in [0, 1]");
  gen->add_option("--plant", sflags.plant, "none, description or context");
  gen->add_option("--split-output", sflags.split_output, "Also write a held-out split file");
  gen->add_option("--split-every", sflags.split_every, "Hold out every n-th paper");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Env env{RunConfig{}, out, err};
    if (!config_path.empty()) load_config_file(env.cfg, config_path);
    overrides.apply(env.cfg);
    env.cfg.validate();

    if (*show) {
      out << to_json(env.cfg) << "\nfingerprint " << fingerprint(env.cfg) << '\n';
      return kExitOk;
    }
    if (*ingest) return cmd_ingest(env);
    if (*perception) return cmd_build_perception(env);
    if (*index) return cmd_build_index(env);
    if (*train) return cmd_train_adapter(env);
    if (*query_cmd) return cmd_query(env, qflags);
    if (*sft) return cmd_emit_sft(env);
    if (*eval) return cmd_evaluate(env, ablation);
    if (*chains) return cmd_analyze_chains(env, with_venue);
    if (*gen) return cmd_gen_synthetic(env, sflags);
    err << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << (e.retriable() ? " (retries exhausted)" : "") << '\n';
    return kExitProvider;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace chainrec::cli
