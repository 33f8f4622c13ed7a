// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "htlab/prompts.hpp"
#include "htlab/types.hpp"

namespace htlab {

enum class ProviderKind { openai_compatible, gemini_compatible, mock };

std::string to_string(ProviderKind p);
ProviderKind provider_from_string(std::string_view s);

struct ModelConfig {
  std::string model_id;
  ProviderKind provider = ProviderKind::mock;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_output_tokens = 8192;
  long context_window_tokens = 8192;
  std::chrono::milliseconds request_timeout{120000};
  int max_retries = 3;
  std::string base_url;      // e.g. https://api.openai.com/v1
  std::string api_key_env;   // environment variable holding the key
  std::string mock_script;   // mock provider only
};

enum class FinishReason { stop, length, error };

struct RawResponse {
  std::string model_id;
  std::string request_fingerprint;  // hash of the rendered prompt
  std::string text;
  FinishReason finish_reason = FinishReason::error;
  std::chrono::milliseconds latency{0};
  int attempt_count = 0;
};

/// The two-channel request shape: the role prompt rides the system
/// channel, every other section the user channel.
struct ChatTurns {
  std::string system_text;
  std::string user_text;
};

/// Outcome of a single provider attempt, before retry policy.
struct AttemptResult {
  bool ok = false;
  bool retryable = false;
  bool timed_out = false;
  std::string text;
  FinishReason finish_reason = FinishReason::error;
  std::string error;     // category prefix + detail when !ok
  int http_status = 0;
};

class Provider {
public:
  virtual ~Provider() = default;
  virtual AttemptResult attempt(const ModelConfig& cfg, const ChatTurns& turns) = 0;
};

// Wire-format builders/parsers, exposed for direct testing.
std::string build_openai_request_body(const ModelConfig& cfg, const ChatTurns& turns);
AttemptResult parse_openai_response_body(const std::string& body);
std::string build_gemini_request_body(const ModelConfig& cfg, const ChatTurns& turns);
AttemptResult parse_gemini_response_body(const std::string& body);

struct SelectionPolicy {
  enum class Kind { campaign_default, by_name } kind = Kind::campaign_default;
  std::string name;
};

/// Deterministic model choice. The default policy ignores the HT type
/// and returns the campaign-configured model; by-name resolves an id.
ModelConfig select_model(const std::vector<ModelConfig>& registry, HTType t,
                         const SelectionPolicy& policy = {});

/// The three stock configurations plus a scriptable mock entry.
std::vector<ModelConfig> default_model_registry();

/// Loads additional/overriding model configs from a JSON file
/// ({"models": [...]}) on top of the defaults.
std::vector<ModelConfig> load_model_registry(const std::filesystem::path& file);

struct GatewayOptions {
  double backoff_scale = 1.0;      // test hook; production 1.0
  int max_concurrent_requests = 4;
  unsigned jitter_seed = 0;        // 0 = nondeterministic seed
};

/// Uniform client over the configured providers. infer() applies the
/// local context-window guard, retries transient failures with
/// exponential backoff, and never lets transport framing leak into the
/// returned text.
class LlmClient {
public:
  explicit LlmClient(GatewayOptions options = {});
  ~LlmClient();

  RawResponse infer(const ModelConfig& cfg, const CombinedPrompt& prompt);
  /// Follow-up turns (compliance review, modification requests).
  RawResponse infer_turns(const ModelConfig& cfg, const ChatTurns& turns);

  /// Total attempts issued since construction (all models).
  long total_attempts() const;

  /// Test hook: route a provider kind through a custom implementation.
  void set_provider_override(ProviderKind kind, std::shared_ptr<Provider> provider);

private:
  Provider& provider_for(const ModelConfig& cfg);

  GatewayOptions options_;
  std::shared_ptr<Provider> openai_, gemini_, mock_;
  std::shared_ptr<Provider> overrides_[3];
  mutable std::mutex mutex_;
  long total_attempts_ = 0;
  std::unique_ptr<class RequestGate> gate_;
};

std::string fingerprint_of(const ChatTurns& turns);

}  // namespace htlab
