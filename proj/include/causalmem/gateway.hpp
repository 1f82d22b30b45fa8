#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "causalmem/domain.hpp"
#include "causalmem/prompts.hpp"
#include "causalmem/text.hpp"
#include "causalmem/util.hpp"

namespace causalmem {

struct Decoding {
  double temperature = 0.0;  // fixed; every request decodes greedily
  int max_tokens = 256;
};

struct GenerationRequest {
  PromptKind kind = PromptKind::NoContext;
  std::string task_text;
  std::string context_payload;
  Decoding decoding;
};

inline std::string render_prompt(const GenerationRequest& req) {
  // Judge prompts need fields a GenerationRequest does not carry (answer,
  // expected answer, aliases), so they arrive pre-rendered in the context
  // slot.
  if (req.kind == PromptKind::Judge) return req.context_payload;
  return render_template(req.kind, req.task_text, req.context_payload);
}

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CacheError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Call counters for tests and for the call-economy checks: how many
/// generations ran per prompt kind, and how many actually left the process.
struct GatewaySnapshot {
  std::array<std::uint64_t, 5> generate_by_kind{};
  std::uint64_t remote_calls = 0;
  std::uint64_t cache_hits = 0;

  std::uint64_t generations(PromptKind kind) const {
    return generate_by_kind[static_cast<std::size_t>(kind)];
  }
};

/// Response-model interface. generate() is non-virtual so instrumentation is
/// uniform across backends; concrete models implement do_generate().
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string id() const = 0;

  std::string generate(const GenerationRequest& request) {
    counts_[static_cast<std::size_t>(request.kind)].fetch_add(1, std::memory_order_relaxed);
    return do_generate(request);
  }

  GatewaySnapshot snapshot() const {
    GatewaySnapshot s;
    for (std::size_t i = 0; i < counts_.size(); ++i)
      s.generate_by_kind[i] = counts_[i].load(std::memory_order_relaxed);
    s.remote_calls = remote_calls_.load(std::memory_order_relaxed);
    s.cache_hits = cache_hits_.load(std::memory_order_relaxed);
    return s;
  }

  void reset_counters() {
    for (auto& c : counts_) c.store(0, std::memory_order_relaxed);
    remote_calls_.store(0, std::memory_order_relaxed);
    cache_hits_.store(0, std::memory_order_relaxed);
  }

 protected:
  virtual std::string do_generate(const GenerationRequest& request) = 0;

  void count_remote() { remote_calls_.fetch_add(1, std::memory_order_relaxed); }
  void count_cache_hit() { cache_hits_.fetch_add(1, std::memory_order_relaxed); }

 private:
  std::array<std::atomic<std::uint64_t>, 5> counts_{};
  std::atomic<std::uint64_t> remote_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

// ---------------------------------------------------------------------------
// Oracle backend
// ---------------------------------------------------------------------------

inline constexpr std::size_t kOracleSummaryBudget = 600;

/// Deterministic simulated response model. Its answer is a pure function of
/// (task_text, context_payload): it parses the request topic and reads the
/// answer out of assertive statements in the context. Plain assertions
/// ("the X is A") take precedence over corrective ones ("the X is actually B"),
/// so a useful memory beats a co-present misleading one. Anything else yields
/// "unknown". Perturbed memories stop matching because placeholdering mangles
/// the asserted span.
class OracleBackend final : public ModelBackend {
 public:
  std::string id() const override { return "oracle"; }

 protected:
  std::string do_generate(const GenerationRequest& request) override {
    switch (request.kind) {
      case PromptKind::Summarize: return summarize_payload(request.context_payload);
      case PromptKind::Judge: return "0";
      default: return answer_for(request.task_text, request.context_payload);
    }
  }

 private:
  static std::string summarize_payload(const std::string& payload) {
    std::string flat;
    flat.reserve(payload.size());
    for (char c : payload) flat.push_back(c == '\n' ? ' ' : c);
    flat = trim(flat);
    if (flat.size() > kOracleSummaryBudget) {
      flat.resize(kOracleSummaryBudget);
      flat += "...";
    }
    return flat;
  }

  static std::string answer_for(const std::string& task, const std::string& context) {
    const std::string task_lower = to_lower_ascii(task);
    const auto topic_start = task_lower.find("what is the ");
    if (topic_start == std::string::npos) return "unknown";
    const auto q = task_lower.find('?', topic_start);
    if (q == std::string::npos) return "unknown";
    const std::string topic =
        trim(task_lower.substr(topic_start + 12, q - (topic_start + 12)));
    if (topic.empty()) return "unknown";

    const std::string needle = "the " + topic + " is ";
    const std::string context_lower = to_lower_ascii(context);

    std::optional<std::string> corrective;
    std::size_t pos = 0;
    while ((pos = context_lower.find(needle, pos)) != std::string::npos) {
      const std::size_t span_begin = pos + needle.size();
      std::size_t span_end = context.find_first_of(".!?;\n", span_begin);
      if (span_end == std::string::npos) span_end = context.size();
      std::string span = trim(context.substr(span_begin, span_end - span_begin));
      pos = span_begin;
      if (span.empty()) continue;
      if (to_lower_ascii(span).rfind("actually ", 0) == 0) {
        if (!corrective) corrective = trim(span.substr(9));
      } else {
        return span;  // first plain assertion wins
      }
    }
    if (corrective && !corrective->empty()) return *corrective;
    return "unknown";
  }
};

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

inline std::string make_cache_key(const std::string& backend_id, const GenerationRequest& req,
                                  const std::string& rendered_prompt) {
  std::string material = backend_id;
  material += '\x1f';
  material += prompt_kind_name(req.kind);
  material += '\x1f';
  material += rendered_prompt;
  material += '\x1f';
  material += "temperature=0;max_tokens=" + std::to_string(req.decoding.max_tokens);
  return hex64(fnv1a64(material));
}

/// Content-addressed directory of response records. Corrupt entries are
/// surfaced as CacheError, never skipped.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<std::string> lookup(const std::string& key, const std::string& rendered_prompt) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto path = entry_path(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    if (!in) throw CacheError("cache entry unreadable: " + path.string());
    json record;
    try {
      in >> record;
    } catch (const json::exception& e) {
      throw CacheError("cache entry corrupt: " + path.string() + ": " + e.what());
    }
    if (!record.contains("prompt") || !record.contains("response")) {
      throw CacheError("cache entry missing fields: " + path.string());
    }
    if (record.at("prompt").get<std::string>() != rendered_prompt) {
      throw CacheError("cache key collision for " + path.string());
    }
    return record.at("response").get<std::string>();
  }

  void store(const std::string& key, const std::string& backend_id, const GenerationRequest& req,
             const std::string& rendered_prompt, const std::string& response) {
    std::lock_guard<std::mutex> lock(mutex_);
    json record;
    record["backend_id"] = backend_id;
    record["prompt_kind"] = prompt_kind_name(req.kind);
    record["prompt"] = rendered_prompt;
    record["max_tokens"] = req.decoding.max_tokens;
    record["response"] = response;
    const auto path = entry_path(key);
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw CacheError("cannot write cache entry: " + tmp);
      out << record.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const { return dir_ / (key + ".json"); }

  std::filesystem::path dir_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Live backend
// ---------------------------------------------------------------------------

/// Sends a rendered prompt to a remote model and returns the answer text.
/// Injectable so tests can count and fake remote traffic.
using Transport = std::function<std::string(const std::string& rendered_prompt,
                                            const GenerationRequest& request)>;

struct RetryPolicy {
  int attempts = 3;
  std::vector<int> backoff_ms = {1000, 2000, 4000};
};

struct LiveBackendOptions {
  std::string backend_id = "live";
  std::optional<std::filesystem::path> cache_dir;
  RetryPolicy retry;
  int max_in_flight = 4;
};

class LiveBackend final : public ModelBackend {
 public:
  LiveBackend(LiveBackendOptions options, Transport transport)
      : options_(std::move(options)), transport_(std::move(transport)), in_flight_(options_.max_in_flight) {
    if (options_.cache_dir) cache_ = std::make_unique<ResponseCache>(*options_.cache_dir);
  }

  std::string id() const override { return options_.backend_id; }

 protected:
  std::string do_generate(const GenerationRequest& request) override {
    const std::string rendered = render_prompt(request);
    const std::string key = make_cache_key(options_.backend_id, request, rendered);
    if (cache_) {
      if (auto hit = cache_->lookup(key, rendered)) {
        count_cache_hit();
        return *hit;
      }
    }
    std::string response = call_with_retry(rendered, request);
    if (cache_) cache_->store(key, options_.backend_id, request, rendered, response);
    return response;
  }

 private:
  std::string call_with_retry(const std::string& rendered, const GenerationRequest& request) {
    std::string last_error;
    for (int attempt = 0; attempt < options_.retry.attempts; ++attempt) {
      try {
        in_flight_.acquire();
        count_remote();
        std::string out;
        try {
          out = transport_(rendered, request);
        } catch (...) {
          in_flight_.release();
          throw;
        }
        in_flight_.release();
        return out;
      } catch (const std::exception& e) {
        last_error = e.what();
        if (attempt + 1 < options_.retry.attempts) {
          const auto& backoff = options_.retry.backoff_ms;
          const int ms = attempt < static_cast<int>(backoff.size())
                             ? backoff[static_cast<std::size_t>(attempt)]
                             : backoff.empty() ? 0 : backoff.back();
          if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        }
      }
    }
    throw TransportError("remote generation failed after " +
                         std::to_string(options_.retry.attempts) + " attempts: " + last_error);
  }

  LiveBackendOptions options_;
  Transport transport_;
  std::unique_ptr<ResponseCache> cache_;
  std::counting_semaphore<1024> in_flight_;
};

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dimension() const = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// Offline embedding provider: hashed bag of tokens, L2-normalized. Not
/// semantically meaningful, but deterministic, so vector baselines run with
/// no network and tests can hand-compute cosines.
class HashedEmbedder final : public Embedder {
 public:
  static constexpr int kDimension = 256;

  int dimension() const override { return kDimension; }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (texts.empty()) throw std::invalid_argument("embed: empty text list");
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
      std::vector<double> v(kDimension, 0.0);
      for (const auto& token : tokenize(text)) {
        v[fnv1a64(token) % kDimension] += 1.0;
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
      }
      out.push_back(std::move(v));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Summarization through a backend
// ---------------------------------------------------------------------------

inline std::string summarize(const std::vector<const MemoryEntry*>& memories,
                             ModelBackend& backend) {
  if (memories.empty()) throw std::invalid_argument("summarize: empty memory list");
  std::string payload;
  for (std::size_t i = 0; i < memories.size(); ++i) {
    if (i) payload += '\n';
    payload += memories[i]->text;
  }
  GenerationRequest req;
  req.kind = PromptKind::Summarize;
  req.context_payload = payload;
  return backend.generate(req);
}

}  // namespace causalmem
