// SPDX-License-Identifier: Apache-2.0
#include "htlab/gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "htlab/errors.hpp"
#include "htlab/text.hpp"
#include "json.hpp"

#include "httplib.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace htlab {

std::string to_string(ProviderKind p) {
  switch (p) {
    case ProviderKind::openai_compatible: return "openai_compatible";
    case ProviderKind::gemini_compatible: return "gemini_compatible";
    case ProviderKind::mock: return "mock";
  }
  return "?";
}

ProviderKind provider_from_string(std::string_view s) {
  std::string l = to_lower(trim(s));
  if (l == "openai_compatible" || l == "openai") return ProviderKind::openai_compatible;
  if (l == "gemini_compatible" || l == "gemini") return ProviderKind::gemini_compatible;
  if (l == "mock") return ProviderKind::mock;
  throw Error(Errc::invalid_argument, "unknown provider: " + std::string(s));
}

std::string fingerprint_of(const ChatTurns& turns) {
  if (turns.system_text.empty()) return fnv1a64_hex(turns.user_text);
  return fnv1a64_hex(turns.system_text + "\n\n" + turns.user_text);
}

// ---------------------------------------------------------------------------
// Wire formats

std::string build_openai_request_body(const ModelConfig& cfg, const ChatTurns& turns) {
  json body;
  body["model"] = cfg.model_id;
  body["temperature"] = cfg.temperature;
  body["top_p"] = cfg.top_p;
  body["max_tokens"] = cfg.max_output_tokens;
  body["messages"] = json::array({
      json{{"role", "system"}, {"content", turns.system_text}},
      json{{"role", "user"}, {"content", turns.user_text}},
  });
  return body.dump();
}

AttemptResult parse_openai_response_body(const std::string& body) {
  AttemptResult r;
  try {
    json j = json::parse(body);
    const auto& choice = j.at("choices").at(0);
    r.text = choice.at("message").at("content").get<std::string>();
    std::string reason = choice.value("finish_reason", "stop");
    r.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
    r.ok = !r.text.empty();
    if (!r.ok) r.error = "ProviderError: empty completion";
  } catch (const json::exception& e) {
    r.ok = false;
    r.error = std::string("ProviderError: malformed response body: ") + e.what();
  }
  return r;
}

std::string build_gemini_request_body(const ModelConfig& cfg, const ChatTurns& turns) {
  json body;
  body["system_instruction"] = json{{"parts", json::array({json{{"text", turns.system_text}}})}};
  body["contents"] = json::array({
      json{{"role", "user"}, {"parts", json::array({json{{"text", turns.user_text}}})}},
  });
  body["generationConfig"] = json{
      {"temperature", cfg.temperature},
      {"topP", cfg.top_p},
      {"maxOutputTokens", cfg.max_output_tokens},
  };
  return body.dump();
}

AttemptResult parse_gemini_response_body(const std::string& body) {
  AttemptResult r;
  try {
    json j = json::parse(body);
    const auto& cand = j.at("candidates").at(0);
    std::string text;
    for (const auto& part : cand.at("content").at("parts"))
      if (part.contains("text")) text += part.at("text").get<std::string>();
    r.text = std::move(text);
    std::string reason = cand.value("finishReason", "STOP");
    r.finish_reason = reason == "MAX_TOKENS" ? FinishReason::length : FinishReason::stop;
    r.ok = !r.text.empty();
    if (!r.ok) r.error = "ProviderError: empty candidate";
  } catch (const json::exception& e) {
    r.ok = false;
    r.error = std::string("ProviderError: malformed response body: ") + e.what();
  }
  return r;
}

// ---------------------------------------------------------------------------
// HTTP transport shared by the OpenAI- and Gemini-compatible providers.

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, possibly empty
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(Errc::config_error, "base_url missing scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

std::string require_api_key(const ModelConfig& cfg) {
  if (cfg.api_key_env.empty())
    throw Error(Errc::auth_failure, "no api_key_env configured for " + cfg.model_id);
  const char* key = std::getenv(cfg.api_key_env.c_str());
  if (!key || !*key)
    throw Error(Errc::auth_failure,
                "environment variable " + cfg.api_key_env + " is not set");
  return key;
}

AttemptResult classify_http(const httplib::Result& res,
                            AttemptResult (*parse)(const std::string&)) {
  AttemptResult r;
  if (!res) {
    auto err = res.error();
    r.ok = false;
    r.retryable = true;
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      r.timed_out = err == httplib::Error::ConnectionTimeout;
    r.error = "ProviderError: transport: " + httplib::to_string(err);
    return r;
  }
  r.http_status = res->status;
  if (res->status == 200) {
    AttemptResult parsed = parse(res->body);
    parsed.http_status = res->status;
    return parsed;
  }
  r.ok = false;
  std::string excerpt = res->body.substr(0, 200);
  if (res->status == 401 || res->status == 403) {
    r.error = "AuthFailure: status " + std::to_string(res->status) + ": " + excerpt;
  } else if (res->status == 429) {
    r.retryable = true;
    r.error = "RateLimited: status 429: " + excerpt;
  } else if (res->status >= 500) {
    r.retryable = true;
    r.error = "ProviderError: status " + std::to_string(res->status) + ": " + excerpt;
  } else {
    r.error = "ProviderError: status " + std::to_string(res->status) + ": " + excerpt;
  }
  return r;
}

class OpenAiProvider : public Provider {
public:
  AttemptResult attempt(const ModelConfig& cfg, const ChatTurns& turns) override {
    std::string key = require_api_key(cfg);
    SplitUrl url = split_url(cfg.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::milliseconds(cfg.request_timeout));
    client.set_read_timeout(std::chrono::milliseconds(cfg.request_timeout));
    client.set_write_timeout(std::chrono::milliseconds(cfg.request_timeout));
    httplib::Headers headers{{"Authorization", "Bearer " + key}};
    auto res = client.Post(url.prefix + "/chat/completions", headers,
                           build_openai_request_body(cfg, turns), "application/json");
    return classify_http(res, parse_openai_response_body);
  }
};

class GeminiProvider : public Provider {
public:
  AttemptResult attempt(const ModelConfig& cfg, const ChatTurns& turns) override {
    std::string key = require_api_key(cfg);
    SplitUrl url = split_url(cfg.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::milliseconds(cfg.request_timeout));
    client.set_read_timeout(std::chrono::milliseconds(cfg.request_timeout));
    client.set_write_timeout(std::chrono::milliseconds(cfg.request_timeout));
    httplib::Headers headers{{"x-goog-api-key", key}};
    auto res = client.Post(
        url.prefix + "/v1beta/models/" + cfg.model_id + ":generateContent", headers,
        build_gemini_request_body(cfg, turns), "application/json");
    return classify_http(res, parse_gemini_response_body);
  }
};

// ---------------------------------------------------------------------------
// Mock provider: deterministic script-driven replies for offline runs.

struct MockScript {
  std::map<std::string, std::string> by_fingerprint;
  std::map<long, std::string> by_index;
  std::optional<std::string> fallback;
  long call_counter = 0;
};

class MockProvider : public Provider {
public:
  AttemptResult attempt(const ModelConfig& cfg, const ChatTurns& turns) override {
    if (cfg.mock_script.empty()) {
      AttemptResult r;
      r.error = "ProviderError: mock model has no script configured";
      return r;
    }
    std::lock_guard lock(mutex_);
    MockScript& script = load_locked(cfg.mock_script);
    long index = script.call_counter++;
    std::string fp = fingerprint_of(turns);

    const std::string* reply = nullptr;
    if (auto it = script.by_fingerprint.find(fp); it != script.by_fingerprint.end())
      reply = &it->second;
    else if (auto ii = script.by_index.find(index); ii != script.by_index.end())
      reply = &ii->second;
    else if (script.fallback)
      reply = &*script.fallback;

    AttemptResult r;
    if (!reply) {
      r.error = "ProviderError: mock script has no entry for fingerprint " + fp +
                " (call #" + std::to_string(index) + ")";
      return r;
    }
    r.ok = true;
    r.text = *reply;
    r.finish_reason = FinishReason::stop;
    return r;
  }

private:
  MockScript& load_locked(const std::string& path) {
    auto it = scripts_.find(path);
    if (it != scripts_.end()) return it->second;

    MockScript script;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::config_error, "mock script not found: " + path);
    std::string line;
    fs::path base = fs::absolute(fs::path(path)).parent_path();
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(Errc::config_error, "mock script line invalid: " + std::string(e.what()));
      }
      std::string response;
      if (j.contains("response_file")) {
        fs::path rf = j.at("response_file").get<std::string>();
        if (rf.is_relative()) rf = base / rf;
        std::ifstream rin(rf, std::ios::binary);
        if (!rin) throw Error(Errc::config_error, "mock response_file missing: " + rf.string());
        std::ostringstream ss;
        ss << rin.rdbuf();
        response = ss.str();
      } else {
        response = j.at("response").get<std::string>();
      }
      const auto& match = j.at("match");
      if (match.is_number_integer()) {
        script.by_index[match.get<long>()] = std::move(response);
      } else {
        std::string m = match.get<std::string>();
        if (m == "*")
          script.fallback = std::move(response);
        else
          script.by_fingerprint[m] = std::move(response);
      }
    }
    return scripts_.emplace(path, std::move(script)).first->second;
  }

  std::mutex mutex_;
  std::map<std::string, MockScript> scripts_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Concurrency gate: bounds simultaneous in-flight provider requests.

class RequestGate {
public:
  explicit RequestGate(int limit) : limit_(std::max(1, limit)) {}
  void acquire() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
  }
  void release() {
    {
      std::lock_guard lock(m_);
      --active_;
    }
    cv_.notify_one();
  }

private:
  std::mutex m_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
};

LlmClient::LlmClient(GatewayOptions options)
    : options_(options),
      openai_(std::make_shared<OpenAiProvider>()),
      gemini_(std::make_shared<GeminiProvider>()),
      mock_(std::make_shared<MockProvider>()),
      gate_(std::make_unique<RequestGate>(options.max_concurrent_requests)) {}

LlmClient::~LlmClient() = default;

void LlmClient::set_provider_override(ProviderKind kind, std::shared_ptr<Provider> provider) {
  overrides_[static_cast<int>(kind)] = std::move(provider);
}

Provider& LlmClient::provider_for(const ModelConfig& cfg) {
  if (auto& o = overrides_[static_cast<int>(cfg.provider)]) return *o;
  switch (cfg.provider) {
    case ProviderKind::openai_compatible: return *openai_;
    case ProviderKind::gemini_compatible: return *gemini_;
    case ProviderKind::mock: return *mock_;
  }
  return *mock_;
}

long LlmClient::total_attempts() const {
  std::lock_guard lock(mutex_);
  return total_attempts_;
}

RawResponse LlmClient::infer(const ModelConfig& cfg, const CombinedPrompt& prompt) {
  if (prompt.estimated_tokens > cfg.context_window_tokens)
    throw Error(Errc::oversize_for_model,
                "prompt estimate " + std::to_string(prompt.estimated_tokens) +
                    " tokens exceeds context window " +
                    std::to_string(cfg.context_window_tokens) + " of " + cfg.model_id);
  ChatTurns turns;
  std::string user;
  for (const auto& s : prompt.sections) {
    if (s.kind == SectionKind::role) {
      turns.system_text = s.text;
    } else {
      if (!user.empty()) user += "\n\n";
      user += s.text;
    }
  }
  turns.user_text = std::move(user);
  return infer_turns(cfg, turns);
}

RawResponse LlmClient::infer_turns(const ModelConfig& cfg, const ChatTurns& turns) {
  Provider& provider = provider_for(cfg);
  std::string fp = fingerprint_of(turns);

  std::mt19937 rng(options_.jitter_seed ? options_.jitter_seed : std::random_device{}());
  std::uniform_real_distribution<double> jitter(0.8, 1.2);

  auto start = std::chrono::steady_clock::now();
  AttemptResult last;
  int attempts = 0;
  for (int attempt = 1; attempt <= cfg.max_retries + 1; ++attempt) {
    attempts = attempt;
    gate_->acquire();
    try {
      last = provider.attempt(cfg, turns);
    } catch (...) {
      gate_->release();
      {
        std::lock_guard lock(mutex_);
        ++total_attempts_;
      }
      throw;
    }
    gate_->release();
    {
      std::lock_guard lock(mutex_);
      ++total_attempts_;
    }
    if (last.ok || !last.retryable) break;
    if (attempt <= cfg.max_retries) {
      double delay_ms = 1000.0 * std::pow(2.0, attempt - 1) * jitter(rng) * options_.backoff_scale;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long>(std::max(0.0, delay_ms))));
    }
  }

  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  if (!last.ok) {
    Errc code = Errc::provider_error;
    if (last.http_status == 401 || last.http_status == 403) code = Errc::auth_failure;
    else if (last.http_status == 429) code = Errc::rate_limited;
    else if (last.timed_out) code = Errc::timeout;
    throw Error(code, last.error + " (after " + std::to_string(attempts) + " attempt(s))");
  }

  RawResponse r;
  r.model_id = cfg.model_id;
  r.request_fingerprint = fp;
  r.text = last.text;
  r.finish_reason = last.finish_reason;
  r.latency = elapsed;
  r.attempt_count = attempts;
  return r;
}

// ---------------------------------------------------------------------------
// Model registry

ModelConfig select_model(const std::vector<ModelConfig>& registry, HTType t,
                         const SelectionPolicy& policy) {
  (void)t;  // the default policy deliberately ignores the HT type
  if (registry.empty()) throw Error(Errc::empty_registry, "model registry is empty");
  if (policy.kind == SelectionPolicy::Kind::by_name) {
    for (const auto& cfg : registry)
      if (cfg.model_id == policy.name) return cfg;
    throw Error(Errc::empty_registry, "no model named '" + policy.name + "' in registry");
  }
  return registry.front();
}

std::vector<ModelConfig> default_model_registry() {
  std::vector<ModelConfig> models;

  ModelConfig gpt4;
  gpt4.model_id = "gpt-4-0613";
  gpt4.provider = ProviderKind::openai_compatible;
  gpt4.temperature = 1.0;
  gpt4.top_p = 1.0;
  gpt4.max_output_tokens = 8192;
  gpt4.context_window_tokens = 8192;
  gpt4.base_url = "https://api.openai.com/v1";
  gpt4.api_key_env = "OPENAI_API_KEY";
  models.push_back(gpt4);

  ModelConfig gemini;
  gemini.model_id = "gemini-1.5-pro";
  gemini.provider = ProviderKind::gemini_compatible;
  gemini.temperature = 1.0;
  gemini.top_p = 0.95;
  gemini.max_output_tokens = 8192;
  gemini.context_window_tokens = 2097152;
  gemini.base_url = "https://generativelanguage.googleapis.com";
  gemini.api_key_env = "GEMINI_API_KEY";
  models.push_back(gemini);

  ModelConfig llama;
  llama.model_id = "llama3-70b-8192";
  llama.provider = ProviderKind::openai_compatible;
  llama.temperature = 1.0;
  llama.top_p = 1.0;
  llama.max_output_tokens = 8192;
  llama.context_window_tokens = 8192;
  llama.base_url = "https://api.groq.com/openai/v1";
  llama.api_key_env = "GROQ_API_KEY";
  models.push_back(llama);

  ModelConfig mock;
  mock.model_id = "mock";
  mock.provider = ProviderKind::mock;
  models.push_back(mock);

  return models;
}

namespace {

void validate_model_config(const ModelConfig& cfg) {
  if (cfg.model_id.empty()) throw Error(Errc::config_error, "model entry missing model_id");
  if (cfg.temperature < 0.0 || cfg.temperature > 2.0)
    throw Error(Errc::config_error, cfg.model_id + ": temperature out of [0,2]");
  if (cfg.top_p <= 0.0 || cfg.top_p > 1.0)
    throw Error(Errc::config_error, cfg.model_id + ": top_p out of (0,1]");
  if (cfg.max_output_tokens < 1)
    throw Error(Errc::config_error, cfg.model_id + ": max_output_tokens must be >= 1");
}

}  // namespace

std::vector<ModelConfig> load_model_registry(const fs::path& file) {
  std::vector<ModelConfig> models = default_model_registry();
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "models file not found: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, file.string() + ": " + e.what());
  }
  for (const auto& entry : j.value("models", json::array())) {
    ModelConfig cfg;
    cfg.model_id = entry.at("model_id").get<std::string>();
    // Start from any same-id default so partial overrides work.
    for (const auto& base : models)
      if (base.model_id == cfg.model_id) cfg = base;
    if (entry.contains("provider"))
      cfg.provider = provider_from_string(entry.at("provider").get<std::string>());
    if (entry.contains("temperature")) cfg.temperature = entry.at("temperature").get<double>();
    if (entry.contains("top_p")) cfg.top_p = entry.at("top_p").get<double>();
    if (entry.contains("max_output_tokens"))
      cfg.max_output_tokens = entry.at("max_output_tokens").get<int>();
    if (entry.contains("context_window_tokens"))
      cfg.context_window_tokens = entry.at("context_window_tokens").get<long>();
    if (entry.contains("request_timeout_ms"))
      cfg.request_timeout = std::chrono::milliseconds(entry.at("request_timeout_ms").get<long>());
    if (entry.contains("max_retries")) cfg.max_retries = entry.at("max_retries").get<int>();
    if (entry.contains("base_url")) cfg.base_url = entry.at("base_url").get<std::string>();
    if (entry.contains("api_key_env")) cfg.api_key_env = entry.at("api_key_env").get<std::string>();
    if (entry.contains("mock_script")) cfg.mock_script = entry.at("mock_script").get<std::string>();
    validate_model_config(cfg);
    bool replaced = false;
    for (auto& base : models)
      if (base.model_id == cfg.model_id) { base = cfg; replaced = true; }
    if (!replaced) models.push_back(cfg);
  }
  return models;
}

}  // namespace htlab
