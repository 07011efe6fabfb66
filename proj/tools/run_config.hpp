#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chainrec/pipeline.hpp"
#include "chainrec/providers.hpp"

namespace chainrec::cli {

/// Every knob a command reads. JSON keys and command-line flags share the
/// field names ("shortlist_size" <-> --shortlist-size).
struct RunConfig {
  // paths
  std::string corpus;
  std::string work_dir = "chainrec-work";
  std::string split;
  std::string output;
  std::string adapter;

  // provider
  std::string endpoint_base = "mock";
  double timeout_seconds = 30.0;
  int max_in_flight = 4;
  int retries = 2;
  std::size_t mock_dim = 256;

  // ingestion
  bool merge_duplicates = true;
  bool filter_mentions = true;
  bool verify_borderline = false;
  int min_mentions = 2;
  int min_experiment_mentions = 1;

  // perception
  int radius = 1;

  // retrieval and reranking
  std::string method = "dense";
  double temperature = 20.0;
  std::size_t shortlist_size = 20;
  std::size_t k = 10;
  bool rerank = true;
  bool llm_rerank = false;
  bool use_chains = true;
  bool use_perception = true;
  bool use_description = true;
  double alpha = 0.5;
  std::size_t chains_per_candidate = 3;
  std::string instruction{kDefaultInstruction};

  // adapter training
  double learning_rate = 0.05;
  int epochs = 50;
  double reg_weight = 1.0;
  std::size_t batch_size = 16;

  // evaluation
  std::vector<std::size_t> recall_ks{10, 20, 30};
  std::vector<std::size_t> hit_ks{5, 10, 15};

  std::uint64_t seed = 7;
  std::size_t jobs = 1;
  std::string format = "text";

  ProviderConfig provider() const;
  PipelineConfig pipeline() const;
  void validate() const;

  std::filesystem::path work_path(const std::string& name) const;
};

std::string to_json(const RunConfig& config);
/// Overlays the keys present in `text` onto `config`. Unknown keys and
/// type mismatches raise UsageError.
void apply_json(RunConfig& config, const std::string& text);
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// Stable hash of everything that can change a result (jobs and output
/// format are left out). 16 hex digits.
std::string fingerprint(const RunConfig& config);

inline constexpr const char* kTokenEnv = "CHAINREC_PROVIDER_TOKEN";

}  // namespace chainrec::cli
