// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "inquiry/belief.hpp"
#include "inquiry/schema.hpp"

namespace inquiry {

struct Question;

namespace prompts {
/// Embedded prompt templates keyed by asset name (e.g. "parser_v1").
const std::map<std::string, std::string>& all();
const std::string& get(const std::string& name);
/// Replaces every {{key}} in `templ` with its value.
std::string fill(std::string templ, const std::map<std::string, std::string>& values);
}  // namespace prompts

/// Client settings for a chat-completions style text-generation endpoint.
struct GatewayConfig {
  std::string endpoint_url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model_name;
  std::string api_key_env_var = "INQUIRY_API_KEY";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{200};  // doubles after each failure
  double max_requests_per_second = 0.0;    // 0 = uncapped

  bool mock_mode = false;
  bool strict_mock = true;  // unkeyed mock requests throw
  std::map<std::string, std::string> mock_script;  // request hash -> response
  /// Consulted when the script has no entry for a request.
  std::function<std::optional<std::string>(const std::string& prompt)> mock_responder;

  std::string log_path;  // JSONL request/response hash log; empty = off
};

/// Hash used to key mock scripts and the audit log.
std::string request_hash(const std::string& prompt);

struct TransportRequest {
  std::string url;
  std::string body;
  std::string api_key;
  std::chrono::milliseconds timeout;
};

struct TransportResponse {
  int status = 0;  // 0 = connection-level failure
  std::string body;
  std::string error;
};

using Transport = std::function<TransportResponse(const TransportRequest&)>;

/// HTTP(S) POST through cpp-httplib.
Transport http_transport();

struct GatewayAttempt {
  std::string request_hash;
  int attempt = 0;
  int status = 0;
  std::string response_hash;
  std::string error;
};

class Gateway {
 public:
  explicit Gateway(GatewayConfig config, Transport transport = {});

  /// Returns the model's text for `prompt`. Mock mode never touches the
  /// transport. Live mode requires the API key variable to be set and retries
  /// connection failures, 429 and 5xx with exponential backoff.
  std::string complete(const std::string& prompt);

  const GatewayConfig& config() const { return config_; }
  std::vector<GatewayAttempt> attempts() const;
  std::size_t transport_calls() const;

 private:
  void record(const GatewayAttempt& attempt);

  GatewayConfig config_;
  Transport transport_;
  mutable std::mutex mutex_;
  std::vector<GatewayAttempt> attempts_;
  std::size_t transport_calls_ = 0;
  std::chrono::steady_clock::time_point last_request_{};
};

/// JSONL, one attempt per line, ordered by request hash, attempt and status.
std::string serialize_attempts(std::vector<GatewayAttempt> attempts);

struct FreetextParse {
  Evidence evidence;
  std::vector<std::string> warnings;
};

/// Asks the model to extract attribute/value pairs from a free-text answer
/// and keeps only pairs that exist in the schema.
FreetextParse parse_freetext_answer_detailed(Gateway& gateway, const Question& question,
                                             const std::string& answer_text, const Schema& schema);
Evidence parse_freetext_answer(Gateway& gateway, const Question& question,
                               const std::string& answer_text, const Schema& schema);

/// Mock responder that understands the oracle's templated sentences and
/// answers parser prompts exactly as the structured parser would.
std::function<std::optional<std::string>(const std::string&)> template_mirror_responder(
    SchemaPtr schema);

}  // namespace inquiry
