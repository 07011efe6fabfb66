#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chainrec/error.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"

namespace chainrec::cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    RunConfig, corpus, work_dir, split, output, adapter, endpoint_base, timeout_seconds,
    max_in_flight, retries, mock_dim, merge_duplicates, filter_mentions, verify_borderline,
    min_mentions, min_experiment_mentions, radius, method, temperature, shortlist_size, k, rerank,
    llm_rerank, use_chains, use_perception, use_description, alpha, chains_per_candidate,
    instruction, learning_rate, epochs, reg_weight, batch_size, recall_ks, hit_ks, seed, jobs,
    format)

ProviderConfig RunConfig::provider() const {
  ProviderConfig p;
  p.endpoint_base = endpoint_base;
  p.timeout_seconds = timeout_seconds;
  p.max_in_flight = max_in_flight;
  p.retries = retries;
  p.mock_dim = mock_dim;
  if (const char* token = std::getenv(kTokenEnv); token != nullptr && *token != '\0') {
    p.auth_token = token;
  }
  return p;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.method = parse_retrieval_method(method);
  p.temperature = temperature;
  p.shortlist_size = shortlist_size;
  p.rerank = rerank;
  p.use_chains = use_chains;
  p.llm_rerank = llm_rerank;
  p.alpha = alpha;
  p.chains_per_candidate = chains_per_candidate;
  p.representation = {use_description, use_perception};
  p.instruction = instruction;
  return p;
}

void RunConfig::validate() const {
  provider().validate();
  pipeline().validate();
  if (work_dir.empty()) throw UsageError("work_dir must not be empty");
  if (radius < 0) throw UsageError("radius must be >= 0");
  if (k < 1) throw UsageError("k must be >= 1");
  if (mock_dim < 1) throw UsageError("mock_dim must be >= 1");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (batch_size < 2) throw UsageError("batch_size must be >= 2");
  if (jobs < 1) throw UsageError("jobs must be >= 1");
  if (format != "text" && format != "json") throw UsageError("format must be text or json");
  for (auto v : recall_ks) {
    if (v < 1) throw UsageError("recall_ks entries must be >= 1");
  }
  for (auto v : hit_ks) {
    if (v < 1) throw UsageError("hit_ks entries must be >= 1");
  }
}

std::filesystem::path RunConfig::work_path(const std::string& name) const {
  return std::filesystem::path(work_dir) / name;
}

std::string to_json(const RunConfig& config) {
  nlohmann::json j = config;
  return j.dump(2);
}

void apply_json(RunConfig& config, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  nlohmann::json current = config;
  for (const auto& [key, value] : j.items()) {
    if (!current.contains(key)) throw UsageError("unknown config key '" + key + "'");
    current[key] = value;
  }
  try {
    config = current.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_json(config, buffer.str());
}

std::string fingerprint(const RunConfig& config) {
  nlohmann::json j = config;
  j.erase("jobs");
  j.erase("format");
  return to_hex(fnv1a64(j.dump()));
}

}  // namespace chainrec::cli
