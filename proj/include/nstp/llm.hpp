#pragma once

// Chat-completions client with record/replay cassettes, and the three
// model-backed operations: problem formulation, goal decomposition and
// plan sampling with token log-probability weights.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nstp/pddl.hpp"
#include "nstp/pipeline.hpp"
#include "nstp/sampling.hpp"

namespace nstp {

struct LlmConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds request_timeout{60'000};
  unsigned max_retries = 2;
  bool logprobs = true;
  /// Ask for n_s choices in one request instead of n_s requests.
  bool multi_choice = false;
  /// Concurrent requests per sample() call.
  unsigned parallelism = 1;

  /// Throws ConfigError.
  void check() const;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  bool logprobs = false;
  unsigned n = 1;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct TokenLogprob {
  std::string text;
  double logprob = 0.0;
};

struct Completion {
  std::string text;
  /// Absent when the endpoint returned no log-probabilities.
  std::optional<std::vector<TokenLogprob>> tokens;
};

/// FNV-1a 64 of the request JSON dump, as 16 lower-case hex digits.
std::string request_hash(const nlohmann::json& request);

struct HttpResponse {
  int status = 0;
  nlohmann::json body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws TransportError when no response could be obtained.
  virtual HttpResponse post(const nlohmann::json& request) = 0;
};

/// HTTPS POST to `config.endpoint_url` with a bearer token from the
/// configured environment variable (omitted when unset).
std::shared_ptr<Transport> http_transport(const LlmConfig& config);

/// Calls `respond` in-process; used to script endpoints in tests and in
/// the fixture generator.
std::shared_ptr<Transport> function_transport(
    std::function<nlohmann::json(const nlohmann::json& request)> respond);

/// JSON array of {"request-hash", "response-body"} entries.
class Cassette {
 public:
  Cassette() = default;
  /// Throws IoError / FormatError.
  static Cassette load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const nlohmann::json* find(const std::string& hash) const;
  void put(const std::string& hash, nlohmann::json body);
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, nlohmann::json>> entries_;
};

/// Serves responses from a cassette; an unknown request is a TransportError.
std::shared_ptr<Transport> replay_transport(Cassette cassette);

/// Forwards to `inner` and appends every successful exchange to the
/// cassette at `path` (rewritten after each call).
std::shared_ptr<Transport> recording_transport(std::shared_ptr<Transport> inner,
                                               std::filesystem::path path);

class LlmGateway {
 public:
  LlmGateway(LlmConfig config, std::shared_ptr<Transport> transport);

  const LlmConfig& config() const { return config_; }

  /// Sends one request, retrying 429 and 5xx answers up to max_retries
  /// times. Throws TransportError, BudgetExceeded (retries used up) and
  /// MalformedOutput (unreadable response body).
  std::vector<Completion> complete(const ChatRequest& request);

  /// Request skeleton with the configured model, temperature and logprobs.
  ChatRequest make_request(std::vector<ChatMessage> messages, std::uint64_t seed,
                           unsigned n = 1) const;

 private:
  LlmConfig config_;
  std::shared_ptr<Transport> transport_;
};

/// Prompt asset: a system text, a user template with {{name}}
/// placeholders, optional repair template and in-context examples.
struct PromptBundle {
  std::string system;
  std::string user;
  std::string repair;
  std::vector<std::pair<std::string, std::string>> examples;

  /// system, then (user, assistant) per example, then the rendered user
  /// template.
  std::vector<ChatMessage> render(const std::map<std::string, std::string>& vars) const;
};

/// Reads a prompt file made of "=== <section>" blocks: system, user,
/// repair, example-input, example-output (examples may repeat). Lines
/// before the first section are ignored.
/// Throws IoError / FormatError.
PromptBundle load_prompt_bundle(const std::filesystem::path& path);
PromptBundle parse_prompt_bundle(std::string_view text);

/// Replaces every "{{name}}" with vars[name]. Unknown names are kept.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Asks for a problem file, parses it, and on failure re-prompts once with
/// the parser message. Throws MalformedOutput, TransportError,
/// BudgetExceeded.
ProblemDef formulate_problem(const std::string& scene_description, const std::string& goal_task,
                             const DomainDef& domain, LlmGateway& gateway,
                             const PromptBundle& bundle, std::uint64_t seed = 0);

/// Reads "(:goal ...)" blocks from the completion. Throws MalformedOutput
/// (no block, or a block that does not type-check) and
/// FinalSubgoalMismatch.
SubgoalSequence decompose_goal(const DomainDef& domain, const ProblemDef& problem,
                               LlmGateway& gateway, const PromptBundle& bundle,
                               std::uint64_t seed = 0);

std::unique_ptr<Decomposer> llm_decomposer(std::shared_ptr<LlmGateway> gateway, PromptBundle bundle);

/// Splits a completion into action lines. Blank lines, ';' comments and
/// code fences are skipped, "N." / "N:" / "step N:" prefixes dropped; the
/// first other line that is not a single flat action ends the plan. Each
/// action's weight is the sum of the log-probabilities of the tokens that
/// start inside its line (a line owns its trailing newline). Without
/// tokens, or when they do not spell out `text`, weights are 0 and
/// missing_logprobs is set.
WeightedPlan weigh_completion(const std::string& text,
                              const std::optional<std::vector<TokenLogprob>>& tokens,
                              std::size_t sample_id);

/// Plan sampler backed by the gateway: n_s requests seeded with
/// derive_seed(req.seed, k), or one n-choice request when configured.
/// Transport failures surface as SamplerUnavailable. Throws ConfigError
/// when the gateway has logprobs disabled.
std::unique_ptr<PlanSampler> llm_plan_sampler(std::shared_ptr<LlmGateway> gateway,
                                              PromptBundle bundle);

}  // namespace nstp
