// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>
#include <tuple>

#include "httplib.h"
#include "inquiry/dialogue.hpp"
#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

namespace prompts {

const std::string& get(const std::string& name) {
  const auto& table = all();
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("no prompt template named '" + name + "'");
  return it->second;
}

std::string fill(std::string templ, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string marker = "{{" + key + "}}";
    for (auto pos = templ.find(marker); pos != std::string::npos;
         pos = templ.find(marker, pos + value.size())) {
      templ.replace(pos, marker.size(), value);
    }
  }
  return templ;
}

}  // namespace prompts

std::string request_hash(const std::string& prompt) { return hex64(fnv1a64(prompt)); }

// -- transport --------------------------------------------------------------------

Transport http_transport() {
  return [](const TransportRequest& request) {
    TransportResponse response;
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(request.url, m, url_re)) {
      response.error = "malformed endpoint URL '" + request.url + "'";
      return response;
    }
    const std::string path = m[2].matched ? m[2].str() : "/";
    httplib::Client client(m[1].str());
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!request.api_key.empty()) headers.emplace("Authorization", "Bearer " + request.api_key);
    auto result = client.Post(path, headers, request.body, "application/json");
    if (!result) {
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
  };
}

// -- gateway ------------------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.max_retries < 0) throw ValidationError("gateway: max retries must be nonnegative");
  if (!transport_) transport_ = http_transport();
}

std::vector<GatewayAttempt> Gateway::attempts() const {
  std::lock_guard lock(mutex_);
  return attempts_;
}

std::size_t Gateway::transport_calls() const {
  std::lock_guard lock(mutex_);
  return transport_calls_;
}

namespace {

std::string attempt_line(const GatewayAttempt& attempt) {
  json j = {{"request", attempt.request_hash}, {"attempt", attempt.attempt},
            {"status", attempt.status},        {"response", attempt.response_hash},
            {"error", attempt.error}};
  return j.dump() + "\n";
}

}  // namespace

void Gateway::record(const GatewayAttempt& attempt) {
  std::lock_guard lock(mutex_);
  attempts_.push_back(attempt);
  if (!config_.log_path.empty()) {
    std::ofstream log(config_.log_path, std::ios::app);
    log << attempt_line(attempt);
  }
}

std::string serialize_attempts(std::vector<GatewayAttempt> attempts) {
  std::sort(attempts.begin(), attempts.end(), [](const GatewayAttempt& a, const GatewayAttempt& b) {
    return std::tie(a.request_hash, a.attempt, a.status, a.response_hash, a.error) <
           std::tie(b.request_hash, b.attempt, b.status, b.response_hash, b.error);
  });
  std::string out;
  for (const auto& a : attempts) out += attempt_line(a);
  return out;
}

namespace {

std::string extract_content(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw GatewayError(std::string("gateway returned invalid JSON: ") + e.what());
  }
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw GatewayError("gateway response has no choices[0].message.content");
  }
}

}  // namespace

std::string Gateway::complete(const std::string& prompt) {
  const std::string hash = request_hash(prompt);
  if (config_.mock_mode) {
    std::optional<std::string> reply;
    if (auto it = config_.mock_script.find(hash); it != config_.mock_script.end()) {
      reply = it->second;
    } else if (config_.mock_responder) {
      reply = config_.mock_responder(prompt);
    }
    if (!reply) {
      if (config_.strict_mock) throw GatewayError("mock gateway has no response for request " + hash);
      reply = std::string();
    }
    record({hash, 1, 200, request_hash(*reply), {}});
    return *reply;
  }

  const char* key = std::getenv(config_.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw GatewayError("environment variable " + config_.api_key_env_var + " is not set");
  }
  if (config_.endpoint_url.empty()) throw GatewayError("gateway endpoint URL is not configured");

  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  const TransportRequest request{config_.endpoint_url, body.dump(), key, config_.timeout};

  auto delay = config_.backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
    if (config_.max_requests_per_second > 0.0) {
      const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / config_.max_requests_per_second));
      std::chrono::steady_clock::time_point wait_until;
      {
        std::lock_guard lock(mutex_);
        wait_until = std::max(std::chrono::steady_clock::now(), last_request_ + gap);
        last_request_ = wait_until;
      }
      std::this_thread::sleep_until(wait_until);
    }
    TransportResponse response;
    {
      std::lock_guard lock(mutex_);
      ++transport_calls_;
    }
    response = transport_(request);
    GatewayAttempt log{hash, attempt, response.status, {}, response.error};
    if (response.status >= 200 && response.status < 300) {
      std::string content = extract_content(response.body);
      log.response_hash = request_hash(content);
      record(log);
      return content;
    }
    record(log);
    last_error = response.status == 0 ? response.error : "HTTP " + std::to_string(response.status);
    const bool retryable = response.status == 0 || response.status == 429 || response.status >= 500;
    if (!retryable) break;
    if (attempt <= config_.max_retries && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw GatewayError("gateway request failed: " + last_error);
}

// -- free-text parsing ------------------------------------------------------------------

FreetextParse parse_freetext_answer_detailed(Gateway& gateway, const Question& question,
                                             const std::string& answer_text, const Schema& schema) {
  std::string attrs;
  std::vector<std::string> ids = question.targets;
  if (ids.empty()) {
    for (const auto& a : schema.attributes()) ids.push_back(a.id);
  }
  for (const auto& id : ids) {
    const auto& a = schema.attribute(schema.require_index(id));
    attrs += "- " + a.id + " (" + a.label + "): ";
    for (std::size_t v = 0; v < a.size(); ++v) attrs += (v ? ", " : "") + a.domain[v];
    attrs += '\n';
  }
  const std::string prompt = prompts::fill(
      prompts::get("parser_v1"), {{"question", question.text}, {"attributes", attrs}, {"answer", answer_text}});
  const std::string reply = gateway.complete(prompt);

  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw GatewayError("parser output contains no JSON object");
  }
  json extracted;
  try {
    extracted = json::parse(reply.substr(open, close - open + 1));
  } catch (const json::parse_error& e) {
    throw GatewayError(std::string("parser output is not valid JSON: ") + e.what());
  }
  if (!extracted.is_object()) throw GatewayError("parser output is not a JSON object");

  FreetextParse result;
  result.evidence.provenance = EvidenceProvenance::kParser;
  auto drop = [&](const std::string& why) {
    result.warnings.push_back(why);
    warn(why);
  };
  for (auto it = extracted.begin(); it != extracted.end(); ++it) {
    auto idx = schema.index_of(it.key());
    if (!idx) {
      drop("parser returned unknown attribute '" + it.key() + "'");
      continue;
    }
    const auto& a = schema.attribute(*idx);
    std::vector<std::string> values;
    if (it.value().is_string()) {
      values.push_back(it.value().get<std::string>());
    } else if (it.value().is_array()) {
      for (const auto& v : it.value()) {
        if (v.is_string()) {
          values.push_back(v.get<std::string>());
        } else {
          drop("parser returned a non-string value for '" + a.id + "'");
        }
      }
    } else {
      drop("parser returned a non-string value for '" + a.id + "'");
      continue;
    }
    std::vector<std::string> kept;
    for (auto& v : values) {
      if (!a.value_index(v)) {
        drop("parser value '" + v + "' is not in the domain of '" + a.id + "'");
      } else if (std::find(kept.begin(), kept.end(), v) == kept.end()) {
        kept.push_back(std::move(v));
      }
    }
    if (!kept.empty()) {
      // Keep domain order so gateway and structured evidence compare equal.
      std::sort(kept.begin(), kept.end(), [&](const std::string& x, const std::string& y) {
        return *a.value_index(x) < *a.value_index(y);
      });
      result.evidence.constraints[a.id] = std::move(kept);
    }
  }
  return result;
}

Evidence parse_freetext_answer(Gateway& gateway, const Question& question,
                               const std::string& answer_text, const Schema& schema) {
  return parse_freetext_answer_detailed(gateway, question, answer_text, schema).evidence;
}

std::function<std::optional<std::string>(const std::string&)> template_mirror_responder(
    SchemaPtr schema) {
  return [schema](const std::string& prompt) -> std::optional<std::string> {
    static const std::string kMarker = "The user answered: ";
    const auto at = prompt.find(kMarker);
    if (at == std::string::npos) return std::nullopt;
    const auto start = at + kMarker.size();
    const std::string answer = prompt.substr(start, prompt.find('\n', start) - start);

    std::map<std::string, std::string> by_label;
    for (const auto& a : schema->attributes()) by_label[a.label] = a.id;

    static const std::regex exact(R"((?:The ([^.]+?) should be|I think the ([^.]+?) is) ([^ ]+?)\.(?= |$))");
    static const std::regex vague(R"(For the ([^.]+?), maybe ([^.]+?)\.(?= |$))");
    static const std::regex split(R"(, | or )");
    json out = json::object();
    for (std::sregex_iterator it(answer.begin(), answer.end(), exact), end; it != end; ++it) {
      const std::string label = (*it)[1].matched ? (*it)[1].str() : (*it)[2].str();
      if (auto f = by_label.find(label); f != by_label.end()) out[f->second] = (*it)[3].str();
    }
    for (std::sregex_iterator it(answer.begin(), answer.end(), vague), end; it != end; ++it) {
      auto f = by_label.find((*it)[1].str());
      if (f == by_label.end()) continue;
      const std::string list = (*it)[2].str();
      json values = json::array();
      for (std::sregex_token_iterator v(list.begin(), list.end(), split, -1), e; v != e; ++v) {
        values.push_back(v->str());
      }
      out[f->second] = values;
    }
    return out.dump();
  };
}

}  // namespace inquiry
