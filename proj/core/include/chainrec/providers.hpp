#pragma once

// Model-provider contract. Every model-backed capability (embedding,
// context summarization, listwise reranking, mention verification) goes
// through this interface, either in-process (MockProvider) or over HTTP to
// a sidecar speaking the JSON wire protocol below.
//
//   POST /embed      {"texts": [..]}                 -> {"dim": n, "vectors": [[..], ..]}
//   POST /summarize  {"contexts": [..]}              -> {"summary": ".."}
//   POST /rerank     {"prompt": ".."}                -> {"ranking": "RANKING: a > b", "justification": ".."}
//   POST /verify     {"entity_id", "canonical_name",
//                     "surface_form", "context"}     -> {"approved": bool}
//   errors           HTTP 4xx/5xx with {"code": "..", "message": ".."}

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chainrec {

struct ProviderConfig {
  std::string endpoint_base = "mock";  // "mock" or e.g. "http://127.0.0.1:8088"
  double timeout_seconds = 30.0;
  int max_in_flight = 4;
  int retries = 2;
  std::optional<std::string> auth_token;
  std::size_t mock_dim = 256;

  /// Throws UsageError on timeout <= 0, max_in_flight < 1 or retries < 0.
  void validate() const;
  bool is_mock() const { return endpoint_base == "mock"; }
};

struct RerankReply {
  std::string ranking;  // "RANKING: id1 > id2 > ..."
  std::string justification;
};

struct VerifyRequest {
  std::string entity_id;
  std::string canonical_name;
  std::string surface_form;
  std::string context;
};

class Provider {
 public:
  virtual ~Provider() = default;

  /// Raw vectors as returned by the backend; callers normalize.
  virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string summarize(const std::vector<std::string>& contexts) = 0;
  virtual RerankReply rerank(const std::string& prompt) = 0;
  virtual bool verify(const VerifyRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Hashed bag of words: every token of tokenize(text) adds 1 to bucket
/// fnv1a64(token) % dim. Not normalized; an empty text gives the zero vector.
std::vector<float> mock_embedding(std::string_view text, std::size_t dim);

/// Deterministic, seed-free, in-process provider.
///  - embed: mock_embedding per text
///  - summarize: the extractive summary with default options
///  - rerank: echoes candidate ids in prompt order (identity permutation)
///  - verify: approves iff the surface form normalizes to the canonical name
/// Pure and safe to share between threads.
class MockProvider final : public Provider {
 public:
  explicit MockProvider(std::size_t dim = 256) : dim_(dim) {}

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
  std::string summarize(const std::vector<std::string>& contexts) override;
  RerankReply rerank(const std::string& prompt) override;
  bool verify(const VerifyRequest& request) override;
  std::string name() const override { return "mock"; }

  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
};

/// Counting semaphore with a runtime bound.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : available_(limit) {}

  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

/// Client for a sidecar speaking the wire protocol. Transport failures and
/// 5xx responses are retried up to `retries` times; at most `max_in_flight`
/// requests are outstanding at once. Thread-safe.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(ProviderConfig config);
  ~HttpProvider() override;

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
  std::string summarize(const std::vector<std::string>& contexts) override;
  RerankReply rerank(const std::string& prompt) override;
  bool verify(const VerifyRequest& request) override;
  std::string name() const override { return config_.endpoint_base; }

 private:
  std::string post(const std::string& path, const std::string& body);

  ProviderConfig config_;
  std::string host_;
  int port_ = 80;
  InFlightLimiter limiter_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config);

struct WireResponse {
  int status = 200;
  std::string body;
};

/// Server side of the wire protocol: decodes a request body for one of the
/// four endpoints, calls the provider and encodes the reply (or an error
/// body). Used by test servers and for recording golden fixtures.
WireResponse handle_wire_request(Provider& provider, std::string_view path,
                                 std::string_view body);

// RANKING grammar: "RANKING:" then ids separated by " > ".

std::string format_ranking_line(const std::vector<std::string>& ids);
/// Parses the last line of `text` starting with "RANKING:". Returns nullopt
/// when there is no such line or it lists no ids.
std::optional<std::vector<std::string>> parse_ranking_line(std::string_view text);

}  // namespace chainrec
