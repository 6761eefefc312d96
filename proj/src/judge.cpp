#include "lrmr/judge.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lrmr/errors.hpp"
#include "lrmr/io.hpp"
#include "lrmr/rng.hpp"
#include "lrmr/sha256.hpp"
#include "lrmr/tournament.hpp"

namespace lrmr {

using nlohmann::json;

namespace {

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    std::uint32_t chunk = std::uint32_t(data[i]) << 16;
    if (i + 1 < data.size()) chunk |= std::uint32_t(data[i + 1]) << 8;
    if (i + 2 < data.size()) chunk |= std::uint32_t(data[i + 2]);
    out.push_back(alphabet[(chunk >> 18) & 63]);
    out.push_back(alphabet[(chunk >> 12) & 63]);
    out.push_back(i + 1 < data.size() ? alphabet[(chunk >> 6) & 63] : '=');
    out.push_back(i + 2 < data.size() ? alphabet[chunk & 63] : '=');
  }
  return out;
}

// Largest N<k> token in the prompt = the number of valid node labels.
int node_count_from_prompt(const std::string& text) {
  int best = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != 'N' || !std::isdigit(static_cast<unsigned char>(text[i + 1]))) continue;
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_'))
      continue;
    long v = 0;
    std::size_t j = i + 1;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])) && v < 100000)
      v = v * 10 + (text[j++] - '0');
    best = std::max(best, int(v));
  }
  return best;
}

// Blinded report as embedded in a stage-two prompt (no patient_id key).
StructuredReport parse_blinded_report(const std::string& payload, const std::string& placeholder_id) {
  const json j = json::parse(payload);
  StructuredReport report;
  report.patient_id = placeholder_id;
  report.node_count = j.value("node_count", 1);
  const auto mode = mode_from_name(j.value("mode", "structured"));
  report.mode = mode.value_or(ReportMode::structured);
  if (report.mode == ReportMode::freeform) {
    report.freeform_text = j.value("freeform_text", "");
    return report;
  }
  for (const auto& jf : j.at("findings")) {
    FeatureFinding f;
    const auto id = feature_from_name(jf.at("feature").get<std::string>());
    if (!id) throw ParseError("unknown feature in embedded report");
    f.feature = *id;
    f.summary = jf.value("summary", "");
    for (const auto& n : jf.at("abnormal_nodes")) f.abnormal_nodes.insert(n.get<std::string>());
    report.findings.push_back(std::move(f));
  }
  return report;
}

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint_url must include a scheme, got " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::http:
      return "http";
    case BackendKind::mock:
      return "mock";
    default:
      return "oracle";
  }
}

std::optional<BackendKind> backend_kind_from_name(const std::string& name) {
  if (name == "http") return BackendKind::http;
  if (name == "mock") return BackendKind::mock;
  if (name == "oracle") return BackendKind::oracle;
  return std::nullopt;
}

void validate_backend_config(const BackendConfig& config) {
  if (config.temperature < 0.0 || config.temperature > 2.0)
    throw ConfigError("temperature must be in [0, 2]");
  if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (config.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (config.kind == BackendKind::http && config.endpoint_url.empty())
    throw ConfigError("http backend requires endpoint_url");
  if (config.backoff_base_s < 0.0) throw ConfigError("backoff_base_s must be >= 0");
}

JudgeRequest make_stage1_request(const PromptText& prompt,
                                 std::vector<std::uint8_t> montage_png,
                                 const BackendConfig& config) {
  if (prompt.stage != PromptStage::one)
    throw ValidationError("stage-one request needs a stage-one prompt");
  JudgeRequest request;
  request.prompt = prompt;
  request.image_digest = sha256_hex(montage_png);
  request.image_png = std::move(montage_png);
  request.model_id = config.model_id;
  request.temperature = config.temperature;
  return request;
}

JudgeRequest make_stage2_request(const PromptText& prompt, const BackendConfig& config) {
  if (prompt.stage != PromptStage::two)
    throw ValidationError("stage-two request needs a stage-two prompt");
  JudgeRequest request;
  request.prompt = prompt;
  request.model_id = config.model_id;
  request.temperature = config.temperature;
  return request;
}

std::string cache_key(const JudgeRequest& request) {
  json j;
  j["model_id"] = request.model_id;
  j["temperature"] = request.temperature;
  j["prompt"] = request.prompt.text;
  j["image_digest"] = request.image_digest ? *request.image_digest : "";
  return sha256_hex(j.dump());
}

// ---- mock judges ----------------------------------------------------------

std::string mock_describe(const NodeFeatureFlags& flags) {
  json findings = json::array();
  for (FeatureId feature : all_features()) {
    std::vector<std::string> abnormal;
    for (std::size_t node = 0; node < flags.size(); ++node)
      if (flags[node][static_cast<int>(feature)]) abnormal.push_back(node_label(int(node) + 1));
    json jf;
    jf["feature"] = feature_name(feature);
    if (abnormal.empty()) {
      jf["summary"] = "No abnormal findings for this feature.";
    } else {
      std::string joined;
      for (std::size_t i = 0; i < abnormal.size(); ++i) {
        if (i) joined += ", ";
        joined += abnormal[i];
      }
      jf["summary"] = "Abnormal appearance in " + joined + ".";
    }
    jf["abnormal_nodes"] = abnormal;
    findings.push_back(std::move(jf));
  }
  json j;
  j["findings"] = std::move(findings);
  return j.dump();
}

std::string mock_compare(const StructuredReport& report_a, const StructuredReport& report_b,
                         const MockBackend::Rule& rule) {
  const long long score_a = rule(report_a);
  const long long score_b = rule(report_b);
  ComparisonVerdict verdict;
  if (score_a > score_b)
    verdict.choice = Choice::A;
  else if (score_b > score_a)
    verdict.choice = Choice::B;
  else
    verdict.choice = Choice::Comparable;
  verdict.analysis = "Deterministic rule comparison: severity score " +
                     std::to_string(score_a) + " for Patient A vs " +
                     std::to_string(score_b) + " for Patient B.";
  return serialize_comparison(verdict);
}

MockBackend::MockBackend(Rule rule) : rule_(std::move(rule)) {
  if (!rule_)
    rule_ = [](const StructuredReport& r) { return rule_based_score(r, default_rule_weights()); };
}

std::string MockBackend::complete(const JudgeRequest& request) {
  if (request.prompt.stage == PromptStage::two) {
    const auto payloads = extract_json_payloads(request.prompt.text, 2);
    if (payloads.size() != 2)
      throw ValidationError("stage-two prompt does not embed two reports");
    const StructuredReport a = parse_blinded_report(payloads[0], "blinded-a");
    const StructuredReport b = parse_blinded_report(payloads[1], "blinded-b");
    auto score = [this](const StructuredReport& r) -> long long {
      return r.mode == ReportMode::structured ? rule_(r)
                                              : (long long)r.freeform_text.size();
    };
    return mock_compare(a, b, score);
  }

  // Stage one: fabricate findings as a pure function of the request.
  const std::uint64_t seed =
      sha256_seed("mock-stage1:" + request.prompt.text + ":" +
                  (request.image_digest ? *request.image_digest : ""));
  Rng rng(seed);
  const int node_count = std::max(1, node_count_from_prompt(request.prompt.text));

  if (request.prompt.mode == ReportMode::freeform) {
    const int level = int(rng.below(11));
    std::string text = "Overall impression: estimated metastatic risk " +
                       std::to_string(level) + " on a 0-10 scale.";
    for (int i = 0; i < level; ++i) {
      const int node = 1 + int(rng.below(std::uint64_t(node_count)));
      text += " Node N" + std::to_string(node) + " shows a suspicious characteristic.";
    }
    return text;
  }

  NodeFeatureFlags flags(static_cast<std::size_t>(node_count));
  for (auto& node_flags : flags)
    for (int f = 0; f < kFeatureCount; ++f) node_flags[f] = rng.unit() < 0.3;
  return mock_describe(flags);
}

// ---- HTTP backend ---------------------------------------------------------

HttpBackend::HttpBackend(const BackendConfig& config) : config_(config) {
  validate_backend_config(config_);
}

std::string HttpBackend::complete(const JudgeRequest& request) {
  const auto [base, path] = split_endpoint(config_.endpoint_url);
  if (base.rfind("https://", 0) == 0)
    throw ConfigError("https endpoints are not supported in this build; "
                      "use an http proxy or gateway");

  httplib::Client client(base);
  client.set_connection_timeout(std::chrono::milliseconds(long(config_.timeout_s * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(long(config_.timeout_s * 1000)));

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  json message;
  message["role"] = "user";
  if (request.image_digest) {
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", request.prompt.text}});
    parts.push_back({{"type", "image_url"},
                     {"image_url",
                      {{"url", "data:image/png;base64," + base64_encode(request.image_png)}}}});
    message["content"] = std::move(parts);
  } else {
    message["content"] = request.prompt.text;
  }

  json body;
  body["model"] = request.model_id;
  body["temperature"] = request.temperature;
  body["messages"] = json::array({std::move(message)});

  const auto result = client.Post(path, headers, body.dump(), "application/json");
  if (!result)
    throw TransportError("http request failed: " + httplib::to_string(result.error()));
  if (result->status < 200 || result->status >= 300)
    throw TransportError("http status " + std::to_string(result->status) + ": " +
                         result->body.substr(0, 200));

  json response;
  try {
    response = json::parse(result->body);
  } catch (const json::exception&) {
    throw TransportError("response body is not JSON");
  }
  try {
    const json& content = response.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string text;
      for (const auto& part : content)
        if (part.contains("text") && part["text"].is_string())
          text += part["text"].get<std::string>();
      return text;
    }
  } catch (const json::exception&) {
  }
  throw TransportError("response lacks choices[0].message.content");
}

// ---- caching / retrying client --------------------------------------------

JudgeClient::JudgeClient(std::shared_ptr<TextBackend> backend, BackendConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  validate_backend_config(config_);
  if (!backend_) throw ConfigError("JudgeClient needs a backend");
  sleeper_ = [](double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  };
}

double JudgeClient::backoff_ceiling_s(int retry, double base_s) {
  double ceiling = base_s;
  for (int i = 0; i < retry; ++i) ceiling *= 2.0;
  return std::min(ceiling, 60.0);
}

std::optional<std::string> JudgeClient::cache_load(const std::string& key) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  const auto path = config_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const json j = json::parse(read_text_file(path));
    return j.at("raw_text").get<std::string>();
  } catch (...) {
    return std::nullopt;  // corrupt entry: fall through to a fresh call
  }
}

void JudgeClient::cache_store(const std::string& key, const JudgeRequest& request,
                              const std::string& raw_text) const {
  if (config_.cache_dir.empty()) return;
  json j;
  j["key"] = key;
  j["model_id"] = request.model_id;
  j["temperature"] = request.temperature;
  j["stage"] = request.prompt.stage == PromptStage::one ? 1 : 2;
  j["image_digest"] = request.image_digest ? *request.image_digest : "";
  j["prompt_sha256"] = sha256_hex(request.prompt.text);
  j["raw_text"] = raw_text;
  j["created_unix"] = long(std::time(nullptr));
  const auto path = config_.cache_dir / key.substr(0, 2) / (key + ".json");
  atomic_write_file(path, j.dump());
}

JudgeResponse JudgeClient::invoke(const JudgeRequest& request, const Validator& validator) {
  stats_.invocations++;
  const std::string key = cache_key(request);
  const auto start = std::chrono::steady_clock::now();

  if (auto cached = cache_load(key)) {
    bool usable = true;
    if (validator) {
      try {
        validator(*cached);
      } catch (const Error&) {
        usable = false;  // stale or corrupt entry, re-ask the backend
      }
    }
    if (usable) {
      stats_.cache_hits++;
      JudgeResponse response;
      response.raw_text = *cached;
      response.cache_hit = true;
      response.attempts = 0;
      response.latency_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return response;
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      stats_.retries++;
      // Full jitter: uniform over [0, base * 2^(attempt-1)], deterministic
      // per (request, attempt) so reruns behave identically.
      Rng jitter(sha256_seed("backoff:" + key + ":" + std::to_string(attempt)));
      sleeper_(jitter.unit() * backoff_ceiling_s(attempt - 1, config_.backoff_base_s));
    }
    try {
      stats_.network_calls++;
      std::string raw = backend_->complete(request);
      if (validator) validator(raw);
      cache_store(key, request, raw);
      JudgeResponse response;
      response.raw_text = std::move(raw);
      response.cache_hit = false;
      response.attempts = attempt + 1;
      response.latency_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return response;
    } catch (const TransportError& e) {
      last_error = e.what();
    } catch (const ParseError& e) {
      last_error = e.what();
    } catch (const ValidationError& e) {
      last_error = e.what();
    }
  }
  stats_.failures++;
  throw JudgeFailure("judge failed after " + std::to_string(config_.max_retries + 1) +
                     " attempts; last error: " + last_error);
}

std::shared_ptr<TextBackend> make_backend(const BackendConfig& config) {
  validate_backend_config(config);
  switch (config.kind) {
    case BackendKind::mock:
      return std::make_shared<MockBackend>(nullptr);
    case BackendKind::http:
      return std::make_shared<HttpBackend>(config);
    default:
      throw ConfigError(
          "the oracle backend compares latent risks inside the simulation "
          "pipeline and cannot serve prompt completions");
  }
}

}  // namespace lrmr
