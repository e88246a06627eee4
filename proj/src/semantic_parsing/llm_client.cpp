// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/semantic_parsing/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>

#include "fgt2m/common/error.hpp"
#include "fgt2m/semantic_parsing/mock_parser.hpp"

namespace fgt2m::semantic_parsing {

using nlohmann::json;

std::string LlmEndpointConfig::api_key_from_env(const std::string& env_var) {
  const char* v = std::getenv(env_var.c_str());
  return v ? v : "";
}

void LlmEndpointConfig::validate() const {
  if (!(timeout_s > 0)) throw Error("semantic_parsing", "bad_config", "llm timeout must be positive");
  if (max_retries < 0) throw Error("semantic_parsing", "bad_config", "llm max_retries must be >= 0");
  if (max_in_flight < 1 || max_in_flight > 1024)
    throw Error("semantic_parsing", "bad_config", "llm max_in_flight must be in [1, 1024]");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
    throw Error("semantic_parsing", "bad_config", "llm base_url must start with http:// or https://");
}

std::string instruction_template() {
  std::string keys_action, keys_semantic;
  for (auto k : kActionKeys) keys_action += (keys_action.empty() ? "" : ", ") + std::string(k);
  for (auto k : kSemanticKeys) keys_semantic += (keys_semantic.empty() ? "" : ", ") + std::string(k);
  return "You analyse short descriptions of human motion. For the description you are given, produce 15 short "
         "analyses.\n"
         "Action analyses: for each body part (left_arm, right_arm, left_leg, right_leg, head, torso) describe in one "
         "phrase how it moves; if it does not take part, describe its resting role (for example \"stabilizing "
         "stance\"). Under verb, restate each verb as a plain description of the movement.\n"
         "Semantic analyses: for each word class (" + keys_semantic + ") explain the words of that class in the "
         "description and what they mean for the motion; use an empty string if the class does not occur.\n"
         "Reply with a single JSON object and nothing else:\n"
         "{\"action\": {" + keys_action + " as string fields}, \"semantic\": {" + keys_semantic +
         " as string fields}}";
}

json build_request(std::string_view prompt, const LlmEndpointConfig& cfg) {
  return {{"model", cfg.model},
          {"temperature", 0},
          {"messages",
           json::array({{{"role", "system"}, {"content", instruction_template()}},
                        {{"role", "user"}, {"content", std::string(prompt)}}})}};
}

ParsedPrompt parse_llm_response(std::string_view prompt, std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw Error("semantic_parsing", "bad_response", "response body is not JSON");
  }
  std::optional<std::string> content;
  if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const json msg = doc["choices"][0].value("message", json::object());
    if (msg.contains("content") && msg["content"].is_string()) content = msg["content"].get<std::string>();
  }
  if (!content) throw Error("semantic_parsing", "bad_response", "response has no choices[0].message.content");
  const std::string& text = *content;
  auto first = text.find('{');
  auto last = text.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first)
    throw Error("semantic_parsing", "schema", "/: model answer contains no JSON object");
  json answer;
  try {
    answer = json::parse(text.substr(first, last - first + 1));
  } catch (const json::parse_error&) {
    throw Error("semantic_parsing", "schema", "/: model answer is not valid JSON");
  }
  if (answer.is_object() && !answer.contains("prompt")) answer["prompt"] = std::string(prompt);
  return parse_entry(answer, ParseSource::kLlm);
}

LlmClient::LlmClient(LlmEndpointConfig cfg) : cfg_(std::move(cfg)), slots_(cfg_.max_in_flight) {
  cfg_.validate();
  auto scheme_end = cfg_.base_url.find("://") + 3;
  auto path_start = cfg_.base_url.find('/', scheme_end);
  scheme_host_port_ = cfg_.base_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

LlmClient::~LlmClient() = default;

ParsedPrompt LlmClient::parse(std::string_view prompt) {
  const std::string key = normalize_prompt(prompt);
  {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  const std::string body = build_request(key, cfg_).dump();

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    ++requests_;
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
        throw Error("semantic_parsing", "timeout", "llm request failed: " + httplib::to_string(err));
      throw Error("semantic_parsing", "transport", "llm request failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300)
      throw Error("semantic_parsing", "http_status", "llm endpoint returned HTTP " + std::to_string(res->status));
    try {
      ParsedPrompt p = parse_llm_response(key, res->body);
      std::lock_guard lock(cache_mu_);
      cache_.emplace(key, p);
      return p;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error("semantic_parsing", "schema",
              "llm answer invalid after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

ParsedPrompt llm_parse(std::string_view prompt, const LlmEndpointConfig& cfg) { return LlmClient(cfg).parse(prompt); }

ParseChain::ParseChain(FixtureTable fixtures, std::shared_ptr<LlmClient> llm)
    : fixtures_(std::move(fixtures)), llm_(std::move(llm)) {}

ParsedPrompt ParseChain::resolve(std::string_view prompt, const text_graph::DependencyGraph& g) const {
  auto it = fixtures_.find(normalize_prompt(prompt));
  if (it != fixtures_.end()) return it->second;
  if (llm_) {
    try {
      ParsedPrompt p = llm_->parse(prompt);
      std::lock_guard lock(mu_);
      fallback_reason_.reset();
      return p;
    } catch (const Error& e) {
      std::lock_guard lock(mu_);
      fallback_reason_ = "E:" + e.module() + ":" + e.code() + " " + e.what();
    }
  }
  return mock_parse(prompt, g);
}

std::optional<std::string> ParseChain::last_fallback_reason() const {
  std::lock_guard lock(mu_);
  return fallback_reason_;
}

}  // namespace fgt2m::semantic_parsing
