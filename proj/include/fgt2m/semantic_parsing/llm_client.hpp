// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fgt2m/semantic_parsing/parsed_prompt.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::semantic_parsing {

struct LlmEndpointConfig {
  std::string base_url;  // e.g. "https://api.example.com/v1"; requests go to <base_url>/chat/completions
  std::string model;
  std::string api_key;   // never logged
  double timeout_s = 30.0;
  int max_retries = 2;
  int max_in_flight = 4;

  /// Reads the key from `env_var`; an unset variable leaves it empty.
  static std::string api_key_from_env(const std::string& env_var);
  void validate() const;
};

/// The instruction sent ahead of each prompt (documented in docs/llm.md).
std::string instruction_template();
nlohmann::json build_request(std::string_view prompt, const LlmEndpointConfig& cfg);

/// Extracts choices[0].message.content, strips code fences, parses the JSON
/// object and validates it with the shared schema validator.
ParsedPrompt parse_llm_response(std::string_view prompt, std::string_view body);

class LlmClient {
 public:
  explicit LlmClient(LlmEndpointConfig cfg);
  ~LlmClient();

  /// Blocking. Retries malformed answers up to max_retries; transport errors,
  /// timeouts and non-2xx statuses throw at once. Successful parses are cached
  /// by normalized prompt.
  ParsedPrompt parse(std::string_view prompt);
  std::size_t requests_sent() const noexcept { return requests_; }

 private:
  LlmEndpointConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
  std::counting_semaphore<1024> slots_;
  std::mutex cache_mu_;
  std::map<std::string, ParsedPrompt> cache_;
  std::atomic<std::size_t> requests_{0};
};

ParsedPrompt llm_parse(std::string_view prompt, const LlmEndpointConfig& cfg);

/// fixture -> llm (when configured) -> mock. Always yields a valid parse.
class ParseChain {
 public:
  ParseChain(FixtureTable fixtures, std::shared_ptr<LlmClient> llm = nullptr);
  ParsedPrompt resolve(std::string_view prompt, const text_graph::DependencyGraph& g) const;
  /// Last LLM failure message, if the most recent resolve fell back.
  std::optional<std::string> last_fallback_reason() const;

 private:
  FixtureTable fixtures_;
  std::shared_ptr<LlmClient> llm_;
  mutable std::mutex mu_;
  mutable std::optional<std::string> fallback_reason_;
};

}  // namespace fgt2m::semantic_parsing
