#pragma once

// Live-provider wiring: chat-completion transport, remote judge, and remote
// embeddings. Nothing in here runs during offline (oracle) evaluation.

#include <cstdlib>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "causalmem/gateway.hpp"
#include "causalmem/scoring.hpp"

namespace causalmem {

struct LiveEnv {
  std::string api_base;
  std::string api_key;
  std::string model = "gpt-4.1";
  std::string judge_model = "gpt-5";
  std::string embed_model = "text-embedding-3-large";
};

/// Reads CM_API_BASE / CM_API_KEY (and optional CM_MODEL, CM_JUDGE_MODEL,
/// CM_EMBED_MODEL). Returns nullopt when credentials are missing.
inline std::optional<LiveEnv> live_env_from_process() {
  const char* base = std::getenv("CM_API_BASE");
  const char* key = std::getenv("CM_API_KEY");
  if (!base || !key) return std::nullopt;
  LiveEnv env;
  env.api_base = base;
  env.api_key = key;
  if (const char* m = std::getenv("CM_MODEL")) env.model = m;
  if (const char* j = std::getenv("CM_JUDGE_MODEL")) env.judge_model = j;
  if (const char* e = std::getenv("CM_EMBED_MODEL")) env.embed_model = e;
  return env;
}

/// Chat-completion transport over the standard JSON wire shape.
inline Transport make_http_transport(const LiveEnv& env, std::string model) {
  return [env, model = std::move(model)](const std::string& rendered_prompt,
                                         const GenerationRequest& request) -> std::string {
    httplib::Client client(env.api_base);
    client.set_read_timeout(120, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + env.api_key}};
    json body;
    body["model"] = model;
    body["temperature"] = 0.0;
    body["max_tokens"] = request.decoding.max_tokens;
    body["messages"] = json::array({json{{"role", "user"}, {"content", rendered_prompt}}});
    auto res = client.Post("/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      throw TransportError("transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw TransportError("remote status " + std::to_string(res->status) + ": " + res->body);
    }
    const json parsed = json::parse(res->body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  };
}

/// Judge handle backed by a model backend: renders the judge prompt, asks for
/// a scalar, parses the first number out of the reply. Failure -> nullopt so
/// scoring falls back to det-only with a warning flag.
inline JudgeFn make_backend_judge(ModelBackend& backend) {
  return [&backend](const JudgeRequest& req) -> std::optional<double> {
    GenerationRequest gen;
    gen.kind = PromptKind::Judge;
    gen.task_text = req.task_text;
    gen.context_payload = render_judge_prompt(req);
    std::string reply;
    try {
      reply = backend.generate(gen);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    try {
      std::size_t pos = reply.find_first_of("0123456789.");
      if (pos == std::string::npos) return std::nullopt;
      return std::stod(reply.substr(pos));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
}

/// Remote embedding provider (dimension discovered from the first response).
class LiveEmbedder final : public Embedder {
 public:
  explicit LiveEmbedder(LiveEnv env) : env_(std::move(env)) {}

  int dimension() const override { return dimension_; }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (texts.empty()) throw std::invalid_argument("embed: empty text list");
    httplib::Client client(env_.api_base);
    client.set_read_timeout(120, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + env_.api_key}};
    json body;
    body["model"] = env_.embed_model;
    body["input"] = texts;
    auto res = client.Post("/embeddings", headers, body.dump(), "application/json");
    if (!res) {
      throw TransportError("embedding transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw TransportError("embedding status " + std::to_string(res->status) + ": " + res->body);
    }
    const json parsed = json::parse(res->body);
    std::vector<std::vector<double>> out;
    for (const auto& item : parsed.at("data")) {
      out.push_back(item.at("embedding").get<std::vector<double>>());
    }
    if (!out.empty()) dimension_ = static_cast<int>(out.front().size());
    return out;
  }

 private:
  LiveEnv env_;
  int dimension_ = 0;
};

}  // namespace causalmem
