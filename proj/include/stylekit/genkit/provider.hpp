#pragma once

#include <httplib.h>
// <resolv.h> defines _res as a macro, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/error.hpp"
#include "stylekit/hash.hpp"
#include "stylekit/jsonl.hpp"

namespace stylekit::genkit {

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_ms = 200;  // doubled after every failed attempt
};

struct ProviderConfig {
  std::string base_url;  // http(s)://host[:port]/path, or a local embedding JSONL path (offline)
  std::string model_name;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_concurrent = 4;
  RetryPolicy retry;
  std::string cache_path;  // empty: in-memory cache only
  std::string api_key_env;  // name of the env var holding a bearer token, if any
  std::size_t batch_size = 64;  // texts per embedding request
  int timeout_s = 60;

  void validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw PreconditionError("temperature must be in [0, 2]");
    if (!(top_p >= 0.0 && top_p <= 1.0)) throw PreconditionError("top_p must be in [0, 1]");
    if (max_concurrent < 1) throw PreconditionError("max_concurrent must be >= 1");
    if (retry.max_attempts < 1) throw PreconditionError("retry.max_attempts must be >= 1");
    if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
  }

  bool offline() const { return !base_url.starts_with("http://") && !base_url.starts_with("https://"); }
};

/// Sampling parameters used for pair generation and topic extraction.
struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;

  static SamplingParams pair_generation() { return {1.0, 1.0}; }
  static SamplingParams topic_extraction() { return {1.0, 0.0}; }
};

struct Telemetry {
  std::atomic<std::size_t> network_calls{0};
  std::atomic<std::size_t> cache_hits{0};
  std::atomic<std::size_t> retries{0};
};

/// Append-only JSONL cache of {hash, request, response, timestamp}. The
/// whole file is indexed at open; later entries win on duplicate hashes.
class ResponseCache {
public:
  explicit ResponseCache(std::string path = {}) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    for_each_jsonl(path_, [&](const json& j, std::size_t) {
      entries_[field::string(j, "hash")] = field::require(j, "response");
    });
  }

  std::optional<json> get(const std::string& hash) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& hash, const json& request, const json& response) {
    std::lock_guard lock(mu_);
    entries_[hash] = response;
    if (path_.empty()) return;
    const auto parent = std::filesystem::path(path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to cache " + path_);
    json line{{"hash", hash}, {"request", request}, {"response", response}, {"timestamp", now_iso8601()}};
    out << canonical(line) << '\n';
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  static std::string key(const json& request) { return sha256_hex(canonical(request)); }

private:
  static std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, json> entries_;
};

namespace detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PreconditionError("not a URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// POSTs JSON with retries; returns the parsed response body.
inline json post_json(const ProviderConfig& cfg, const json& body, Telemetry& telemetry) {
  const auto url = parse_url(cfg.base_url);
  httplib::Headers headers;
  if (!cfg.api_key_env.empty())
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) headers.emplace("Authorization", std::string("Bearer ") + key);
  const std::string payload = canonical(body);

  std::string log;
  int backoff = cfg.retry.backoff_ms;
  for (int attempt = 1; attempt <= cfg.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      ++telemetry.retries;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg.timeout_s, 0);
    client.set_read_timeout(cfg.timeout_s, 0);
    ++telemetry.network_calls;
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      log += "attempt " + std::to_string(attempt) + ": " + httplib::to_string(res.error()) + "\n";
      continue;
    }
    if (res->status != 200) {
      log += "attempt " + std::to_string(attempt) + ": HTTP " + std::to_string(res->status) + "\n";
      continue;
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw Error("malformed_response", std::string("response body is not JSON: ") + e.what());
    }
  }
  throw TransportError("request to " + cfg.base_url + " failed after " + std::to_string(cfg.retry.max_attempts) +
                           " attempts",
                       log);
}

}  // namespace detail

/// Chat-completion client with a content-addressed response cache.
class LlmClient {
public:
  explicit LlmClient(ProviderConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_.cache_path) { cfg_.validate(); }

  std::string generate(const std::string& prompt, const SamplingParams& params) {
    json request{{"model", cfg_.model_name},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", params.temperature},
                 {"top_p", params.top_p}};
    const auto hash = ResponseCache::key(json{{"kind", "chat"}, {"request", request}});
    if (auto hit = cache_.get(hash)) {
      ++telemetry_.cache_hits;
      return hit->get<std::string>();
    }
    if (cfg_.offline()) throw TransportError("offline provider has no cached response for prompt", "");
    const json body = detail::post_json(cfg_, request, telemetry_);
    const std::string text = extract_text(body);
    cache_.put(hash, request, text);
    return text;
  }

  std::string generate(const std::string& prompt) { return generate(prompt, {cfg_.temperature, cfg_.top_p}); }

  const Telemetry& telemetry() const { return telemetry_; }
  const ProviderConfig& config() const { return cfg_; }

  static std::string extract_text(const json& body) {
    try {
      if (body.contains("choices") && !body["choices"].empty()) {
        const auto& c = body["choices"][0];
        if (c.contains("message")) return c["message"].at("content").get<std::string>();
        if (c.contains("text")) return c["text"].get<std::string>();
      }
      if (body.contains("output_text")) return body["output_text"].get<std::string>();
    } catch (const json::exception& e) {
      throw Error("malformed_response", e.what());
    }
    throw Error("malformed_response", "no completion text in response");
  }

private:
  ProviderConfig cfg_;
  ResponseCache cache_;
  Telemetry telemetry_;
};

/// Embedding client. Online: batched POSTs of {model, input: [...]} expecting
/// {data: [{index, embedding}]}, at most max_concurrent in flight. Offline:
/// base_url names a local embedding JSONL file and lookups go by key.
class EmbeddingClient {
public:
  explicit EmbeddingClient(ProviderConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_.offline() ? "" : cfg_.cache_path) {
    cfg_.validate();
  }

  EmbeddingSet embed_texts(const std::vector<std::pair<std::string, std::string>>& keys_and_texts) {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < keys_and_texts.size(); ++i) {
      if (!seen.emplace(keys_and_texts[i].first, i).second)
        throw ValidationError("duplicate text key '" + keys_and_texts[i].first + "'");
      if (keys_and_texts[i].second.empty()) throw PreconditionError("text for '" + keys_and_texts[i].first + "' is empty");
    }
    if (cfg_.offline()) return embed_offline(keys_and_texts);

    std::vector<std::vector<double>> vectors(keys_and_texts.size());
    std::vector<std::string> hashes(keys_and_texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < keys_and_texts.size(); ++i) {
      hashes[i] = ResponseCache::key(
          json{{"kind", "embedding"}, {"model", cfg_.model_name}, {"input", keys_and_texts[i].second}});
      if (auto hit = cache_.get(hashes[i])) {
        ++telemetry_.cache_hits;
        vectors[i] = hit->get<std::vector<double>>();
      } else {
        missing.push_back(i);
      }
    }

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t s = 0; s < missing.size(); s += cfg_.batch_size)
      batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(s),
                           missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), s + cfg_.batch_size)));

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
      for (std::size_t b; (b = next++) < batches.size();) {
        try {
          json input = json::array();
          for (std::size_t i : batches[b]) input.push_back(keys_and_texts[i].second);
          const json body = detail::post_json(cfg_, json{{"model", cfg_.model_name}, {"input", input}}, telemetry_);
          auto got = parse_embedding_response(body, batches[b].size());
          for (std::size_t k = 0; k < batches[b].size(); ++k) vectors[batches[b][k]] = std::move(got[k]);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          next = batches.size();
        }
      }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_concurrent), batches.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t i : missing)
      cache_.put(hashes[i], json{{"model", cfg_.model_name}, {"input", keys_and_texts[i].second}}, vectors[i]);

    EmbeddingSet out;
    for (std::size_t i = 0; i < keys_and_texts.size(); ++i) out.add(keys_and_texts[i].first, std::move(vectors[i]));
    return out;
  }

  const Telemetry& telemetry() const { return telemetry_; }

  static std::vector<std::vector<double>> parse_embedding_response(const json& body, std::size_t expected) {
    try {
      const auto& data = body.at("data");
      if (data.size() != expected)
        throw Error("malformed_response", "expected " + std::to_string(expected) + " embeddings, got " +
                                              std::to_string(data.size()));
      std::vector<std::vector<double>> out(expected);
      for (std::size_t k = 0; k < data.size(); ++k) {
        const auto idx = data[k].contains("index") ? data[k]["index"].get<std::size_t>() : k;
        if (idx >= expected || !out[idx].empty()) throw Error("malformed_response", "bad embedding index");
        out[idx] = data[k].at("embedding").get<std::vector<double>>();
      }
      for (const auto& v : out)
        if (v.size() != out.front().size()) throw DimensionError("embedding dimensions differ within a batch");
      return out;
    } catch (const json::exception& e) {
      throw Error("malformed_response", e.what());
    }
  }

private:
  EmbeddingSet embed_offline(const std::vector<std::pair<std::string, std::string>>& keys_and_texts) {
    std::string path = cfg_.base_url;
    if (path.starts_with("file://")) path = path.substr(7);
    if (!offline_) offline_ = load_embeddings(path);
    EmbeddingSet out;
    for (const auto& [key, _] : keys_and_texts) {
      const auto v = offline_->at(key);
      out.add(key, {v.begin(), v.end()});
    }
    return out;
  }

  ProviderConfig cfg_;
  ResponseCache cache_;
  Telemetry telemetry_;
  std::optional<EmbeddingSet> offline_;
};

}  // namespace stylekit::genkit
