#include "chainrec/providers.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "chainrec/corpus.hpp"
#include "chainrec/error.hpp"
#include "chainrec/perception.hpp"
#include "chainrec/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace chainrec {

using nlohmann::json;

void ProviderConfig::validate() const {
  if (!(timeout_seconds > 0.0)) throw UsageError("provider timeout must be > 0");
  if (max_in_flight < 1) throw UsageError("provider max_in_flight must be >= 1");
  if (retries < 0) throw UsageError("provider retries must be >= 0");
  if (mock_dim == 0) throw UsageError("mock embedding dimension must be >= 1");
}

std::vector<float> mock_embedding(std::string_view text, std::size_t dim) {
  std::vector<float> v(dim, 0.0f);
  for (const auto& token : tokenize(text)) v[fnv1a64(token) % dim] += 1.0f;
  return v;
}

std::vector<std::vector<float>> MockProvider::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(mock_embedding(t, dim_));
  return out;
}

std::string MockProvider::summarize(const std::vector<std::string>& contexts) {
  return extractive_summary(contexts);
}

RerankReply MockProvider::rerank(const std::string& prompt) {
  std::vector<std::string> ids;
  std::istringstream lines(prompt);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.starts_with("CANDIDATE ")) continue;
    const auto at = line.find("id=");
    if (at == std::string::npos) continue;
    const auto end = line.find_first_of(" \t", at + 3);
    ids.push_back(line.substr(at + 3, end == std::string::npos ? std::string::npos : end - at - 3));
  }
  return {format_ranking_line(ids), "mock: retrieval order retained"};
}

bool MockProvider::verify(const VerifyRequest& request) {
  try {
    return normalize_name(request.surface_form) == request.canonical_name;
  } catch (const DataError&) {
    return false;
  }
}

// ---------------------------------------------------------------------------

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return available_ > 0; });
  --available_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++available_;
  }
  cv_.notify_one();
}

namespace {

struct LimiterGuard {
  explicit LimiterGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~LimiterGuard() { limiter.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;
  InFlightLimiter& limiter;
};

json parse_reply(const std::string& body, const char* endpoint) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string(endpoint) + ": malformed response body: " + e.what(), false);
  }
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig config)
    : config_(std::move(config)), limiter_(config_.max_in_flight) {
  config_.validate();
  if (config_.is_mock()) throw UsageError("HttpProvider needs an http:// endpoint");
}

HttpProvider::~HttpProvider() = default;

std::string HttpProvider::post(const std::string& path, const std::string& body) {
  LimiterGuard guard(limiter_);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    httplib::Client client(config_.endpoint_base);
    client.set_connection_timeout(micros);
    client.set_read_timeout(micros);
    client.set_write_timeout(micros);
    if (config_.auth_token) client.set_bearer_token_auth(*config_.auth_token);
    auto result = client.Post(path, body, "application/json");
    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = "server error " + std::to_string(result->status) + ": " + result->body;
      continue;
    }
    if (result->status != 200) {
      std::string message = result->body;
      try {
        const auto err = json::parse(result->body);
        message = err.value("code", "") + ": " + err.value("message", "");
      } catch (const json::exception&) {
      }
      throw ProviderError(path + " rejected the request (" + std::to_string(result->status) +
                              "): " + message,
                          false);
    }
    return result->body;
  }
  throw ProviderError(path + " failed after " + std::to_string(config_.retries + 1) +
                          " attempts: " + last_error,
                      true);
}

std::vector<std::vector<float>> HttpProvider::embed(const std::vector<std::string>& texts) {
  const auto reply = parse_reply(post("/embed", json{{"texts", texts}}.dump()), "/embed");
  try {
    const auto dim = reply.at("dim").get<std::size_t>();
    auto vectors = reply.at("vectors").get<std::vector<std::vector<float>>>();
    if (vectors.size() != texts.size()) {
      throw ProviderError("/embed returned " + std::to_string(vectors.size()) + " vectors for " +
                              std::to_string(texts.size()) + " texts",
                          false);
    }
    for (const auto& v : vectors) {
      if (v.size() != dim) throw ProviderError("/embed: dimension mismatch within batch", false);
    }
    return vectors;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("/embed: schema violation: ") + e.what(), false);
  }
}

std::string HttpProvider::summarize(const std::vector<std::string>& contexts) {
  const auto reply =
      parse_reply(post("/summarize", json{{"contexts", contexts}}.dump()), "/summarize");
  try {
    return reply.at("summary").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("/summarize: schema violation: ") + e.what(), false);
  }
}

RerankReply HttpProvider::rerank(const std::string& prompt) {
  const auto reply = parse_reply(post("/rerank", json{{"prompt", prompt}}.dump()), "/rerank");
  try {
    return {reply.at("ranking").get<std::string>(), reply.value("justification", "")};
  } catch (const json::exception& e) {
    throw ProviderError(std::string("/rerank: schema violation: ") + e.what(), false);
  }
}

bool HttpProvider::verify(const VerifyRequest& request) {
  const json body{{"entity_id", request.entity_id},
                  {"canonical_name", request.canonical_name},
                  {"surface_form", request.surface_form},
                  {"context", request.context}};
  const auto reply = parse_reply(post("/verify", body.dump()), "/verify");
  try {
    return reply.at("approved").get<bool>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("/verify: schema violation: ") + e.what(), false);
  }
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config) {
  config.validate();
  if (config.is_mock()) return std::make_unique<MockProvider>(config.mock_dim);
  if (!config.endpoint_base.starts_with("http://") && !config.endpoint_base.starts_with("https://")) {
    throw UsageError("provider endpoint must be 'mock' or an http(s):// URL, got '" +
                     config.endpoint_base + "'");
  }
  return std::make_unique<HttpProvider>(config);
}

// ---------------------------------------------------------------------------

namespace {

WireResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, json{{"code", code}, {"message", message}}.dump()};
}

}  // namespace

WireResponse handle_wire_request(Provider& provider, std::string_view path,
                                 std::string_view body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, "bad_request", std::string("invalid JSON: ") + e.what());
  }
  try {
    if (path == "/embed") {
      const auto texts = request.at("texts").get<std::vector<std::string>>();
      const auto vectors = provider.embed(texts);
      const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();
      return {200, json{{"dim", dim}, {"vectors", vectors}}.dump()};
    }
    if (path == "/summarize") {
      const auto contexts = request.at("contexts").get<std::vector<std::string>>();
      return {200, json{{"summary", provider.summarize(contexts)}}.dump()};
    }
    if (path == "/rerank") {
      const auto reply = provider.rerank(request.at("prompt").get<std::string>());
      return {200, json{{"ranking", reply.ranking}, {"justification", reply.justification}}.dump()};
    }
    if (path == "/verify") {
      VerifyRequest v{request.at("entity_id").get<std::string>(),
                      request.at("canonical_name").get<std::string>(),
                      request.at("surface_form").get<std::string>(),
                      request.value("context", "")};
      return {200, json{{"approved", provider.verify(v)}}.dump()};
    }
  } catch (const json::exception& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const ProviderError& e) {
    return error_response(502, "backend_error", e.what());
  }
  return error_response(404, "not_found", "unknown endpoint " + std::string(path));
}

// ---------------------------------------------------------------------------

std::string format_ranking_line(const std::vector<std::string>& ids) {
  return "RANKING: " + join(ids, " > ");
}

std::optional<std::vector<std::string>> parse_ranking_line(std::string_view text) {
  std::optional<std::string_view> found;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    if (line.starts_with("RANKING:")) found = line.substr(8);
    start = end + 1;
  }
  if (!found) return std::nullopt;
  std::vector<std::string> ids;
  std::string_view rest = *found;
  while (true) {
    const auto sep = rest.find('>');
    auto id = trim(rest.substr(0, sep));
    if (id.empty()) return std::nullopt;
    ids.emplace_back(id);
    if (sep == std::string_view::npos) break;
    rest.remove_prefix(sep + 1);
  }
  return ids;
}

}  // namespace chainrec
