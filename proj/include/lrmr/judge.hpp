#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lrmr/prompting.hpp"
#include "lrmr/report.hpp"

namespace lrmr {

enum class BackendKind { http, mock, oracle };

std::string backend_kind_name(BackendKind kind);
std::optional<BackendKind> backend_kind_from_name(const std::string& name);

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string model_id = "mock-judge-1";
  double temperature = 0.1;
  std::string endpoint_url;  // http only
  int max_retries = 3;
  int max_in_flight = 4;
  double timeout_s = 60.0;
  double backoff_base_s = 1.0;          // exponential, factor 2, full jitter
  std::filesystem::path cache_dir;      // empty disables the response cache
  std::string api_key_env = "LRMR_API_KEY";
};

void validate_backend_config(const BackendConfig& config);

struct JudgeRequest {
  PromptText prompt;
  std::optional<std::string> image_digest;         // present iff stage one
  std::vector<std::uint8_t> image_png;             // transport payload (http)
  std::string model_id;
  double temperature = 0.1;
};

JudgeRequest make_stage1_request(const PromptText& prompt,
                                 std::vector<std::uint8_t> montage_png,
                                 const BackendConfig& config);
JudgeRequest make_stage2_request(const PromptText& prompt, const BackendConfig& config);

struct JudgeResponse {
  std::string raw_text;
  bool cache_hit = false;
  int attempts = 0;  // backend calls performed; 0 on a cache hit
  double latency_s = 0.0;
};

// 256-bit hex digest of (model_id, temperature, prompt text, image digest).
std::string cache_key(const JudgeRequest& request);

// One raw completion attempt; no cache, no retries.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string complete(const JudgeRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Deterministic offline judge. Stage one fabricates a schema-valid report
// whose flags are a pure function of the request; stage two parses the two
// embedded reports out of the prompt and compares them with `rule`.
class MockBackend : public TextBackend {
 public:
  using Rule = std::function<long long(const StructuredReport&)>;
  explicit MockBackend(Rule rule);

  std::string complete(const JudgeRequest& request) override;
  std::string name() const override { return "mock"; }

 private:
  Rule rule_;
};

// Generic chat-completion wire format; see docs/backend.md.
class HttpBackend : public TextBackend {
 public:
  explicit HttpBackend(const BackendConfig& config);

  std::string complete(const JudgeRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  BackendConfig config_;
};

struct JudgeStats {
  std::atomic<long> invocations{0};
  std::atomic<long> network_calls{0};
  std::atomic<long> cache_hits{0};
  std::atomic<long> retries{0};
  std::atomic<long> failures{0};
};

// Cache + retry wrapper around a backend. Thread-safe; cache writes are
// atomic (write-temp-then-rename), reads are lock-free.
class JudgeClient {
 public:
  // Rejecting validator: throws ParseError/ValidationError to request a retry.
  using Validator = std::function<void(const std::string& raw_text)>;
  using Sleeper = std::function<void(double seconds)>;

  JudgeClient(std::shared_ptr<TextBackend> backend, BackendConfig config);

  JudgeResponse invoke(const JudgeRequest& request, const Validator& validator = {});

  const JudgeStats& stats() const { return stats_; }

  // Test hook; production default sleeps for real.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  // Upper bound of the jittered delay before retry k (0-based), seconds.
  static double backoff_ceiling_s(int retry, double base_s);

 private:
  std::optional<std::string> cache_load(const std::string& key) const;
  void cache_store(const std::string& key, const JudgeRequest& request,
                   const std::string& raw_text) const;

  std::shared_ptr<TextBackend> backend_;
  BackendConfig config_;
  Sleeper sleeper_;
  JudgeStats stats_;
};

std::shared_ptr<TextBackend> make_backend(const BackendConfig& config);

// Per-node abnormal-feature flags: flags[node][feature].
using NodeFeatureFlags = std::vector<std::array<bool, kFeatureCount>>;

// Schema-valid stage-one JSON that echoes exactly the supplied flags.
std::string mock_describe(const NodeFeatureFlags& flags);

// {"analysis", "choice"} with A/B/Comparable decided by rule scores.
std::string mock_compare(const StructuredReport& report_a, const StructuredReport& report_b,
                         const MockBackend::Rule& rule);

}  // namespace lrmr
