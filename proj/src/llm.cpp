#include "nstp/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>
#include <thread>

#include "nstp/error.hpp"
#include "nstp/random.hpp"
#include "sexpr.hpp"

namespace nstp {

namespace fs = std::filesystem;

void LlmConfig::check() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (request_timeout.count() <= 0) throw ConfigError("request timeout must be > 0");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (model.empty()) throw ConfigError("model name must not be empty");
}

nlohmann::json ChatRequest::to_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json j = {{"model", model},     {"messages", std::move(msgs)},
                      {"temperature", temperature}, {"logprobs", logprobs},
                      {"n", n},             {"seed", seed}};
  return j;
}

std::string request_hash(const nlohmann::json& request) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : request.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

class FunctionTransport final : public Transport {
 public:
  explicit FunctionTransport(std::function<nlohmann::json(const nlohmann::json&)> respond)
      : respond_(std::move(respond)) {}
  HttpResponse post(const nlohmann::json& request) override { return {200, respond_(request)}; }

 private:
  std::function<nlohmann::json(const nlohmann::json&)> respond_;
};

class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(Cassette cassette) : cassette_(std::move(cassette)) {}
  HttpResponse post(const nlohmann::json& request) override {
    const std::string hash = request_hash(request);
    const nlohmann::json* body = cassette_.find(hash);
    if (!body) throw TransportError("no cassette entry for request " + hash);
    return {200, *body};
  }

 private:
  Cassette cassette_;
};

class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, fs::path path)
      : inner_(std::move(inner)), path_(std::move(path)) {
    std::error_code ec;
    if (fs::exists(path_, ec)) cassette_ = Cassette::load(path_);
  }
  HttpResponse post(const nlohmann::json& request) override {
    HttpResponse r = inner_->post(request);
    if (r.status == 200) {
      std::lock_guard<std::mutex> lock(mutex_);
      cassette_.put(request_hash(request), r.body);
      cassette_.save(path_);
    }
    return r;
  }

 private:
  std::shared_ptr<Transport> inner_;
  fs::path path_;
  std::mutex mutex_;
  Cassette cassette_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::shared_ptr<Transport> function_transport(
    std::function<nlohmann::json(const nlohmann::json& request)> respond) {
  return std::make_shared<FunctionTransport>(std::move(respond));
}

Cassette Cassette::load(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError(path.string() + ": cassette must be a JSON array");
  Cassette c;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("request-hash") || !e.contains("response-body") ||
        !e["request-hash"].is_string()) {
      throw FormatError(path.string() + ": entries need request-hash and response-body");
    }
    c.put(e["request-hash"].get<std::string>(), e["response-body"]);
  }
  return c;
}

void Cassette::save(const fs::path& path) const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [hash, body] : entries_) {
    j.push_back({{"request-hash", hash}, {"response-body", body}});
  }
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

const nlohmann::json* Cassette::find(const std::string& hash) const {
  for (const auto& [h, body] : entries_) {
    if (h == hash) return &body;
  }
  return nullptr;
}

void Cassette::put(const std::string& hash, nlohmann::json body) {
  for (auto& [h, b] : entries_) {
    if (h == hash) {
      b = std::move(body);
      return;
    }
  }
  entries_.emplace_back(hash, std::move(body));
}

std::shared_ptr<Transport> replay_transport(Cassette cassette) {
  return std::make_shared<ReplayTransport>(std::move(cassette));
}

std::shared_ptr<Transport> recording_transport(std::shared_ptr<Transport> inner, fs::path path) {
  return std::make_shared<RecordingTransport>(std::move(inner), std::move(path));
}

LlmGateway::LlmGateway(LlmConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.check();
  if (!transport_) throw ConfigError("gateway needs a transport");
}

ChatRequest LlmGateway::make_request(std::vector<ChatMessage> messages, std::uint64_t seed,
                                     unsigned n) const {
  ChatRequest r;
  r.model = config_.model;
  r.messages = std::move(messages);
  r.temperature = config_.temperature;
  r.logprobs = config_.logprobs;
  r.n = n;
  r.seed = seed;
  return r;
}

std::vector<Completion> LlmGateway::complete(const ChatRequest& request) {
  const nlohmann::json body = request.to_json();
  HttpResponse response;
  for (unsigned attempt = 0;; ++attempt) {
    response = transport_->post(body);
    const bool retryable = response.status == 429 || response.status >= 500;
    if (!retryable) break;
    if (attempt >= config_.max_retries) {
      throw BudgetExceeded("endpoint answered " + std::to_string(response.status) + " after " +
                           std::to_string(attempt + 1) + " attempts");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100) * (1 << std::min(attempt, 6u)));
  }
  if (response.status != 200) {
    throw TransportError("endpoint answered " + std::to_string(response.status));
  }

  std::vector<Completion> out;
  try {
    for (const auto& choice : response.body.at("choices")) {
      Completion c;
      c.text = choice.at("message").at("content").get<std::string>();
      const auto lp = choice.find("logprobs");
      if (lp != choice.end() && lp->is_object() && lp->contains("content") &&
          (*lp)["content"].is_array()) {
        std::vector<TokenLogprob> tokens;
        for (const auto& t : (*lp)["content"]) {
          tokens.push_back(TokenLogprob{t.at("token").get<std::string>(), t.at("logprob").get<double>()});
        }
        c.tokens = std::move(tokens);
      }
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedOutput(std::string("unexpected response body: ") + e.what());
  }
  if (out.empty()) throw MalformedOutput("response without choices");
  return out;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(i, open - i));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it != vars.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    i = close + 2;
  }
  out.append(tmpl.substr(i));
  return out;
}

std::vector<ChatMessage> PromptBundle::render(const std::map<std::string, std::string>& vars) const {
  std::vector<ChatMessage> msgs;
  if (!system.empty()) msgs.push_back({"system", system});
  for (const auto& [in, out] : examples) {
    msgs.push_back({"user", in});
    msgs.push_back({"assistant", out});
  }
  msgs.push_back({"user", render_template(user, vars)});
  return msgs;
}

PromptBundle parse_prompt_bundle(std::string_view text) {
  PromptBundle b;
  std::string section;
  std::string body;
  std::optional<std::string> pending_input;
  auto flush = [&] {
    // Section bodies drop the blank lines that frame them in the file.
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    std::size_t start = 0;
    while (start < body.size() && body[start] == '\n') ++start;
    std::string content = body.substr(start);
    if (section.empty()) {
      // Header lines before the first section are free-form.
    } else if (section == "system") {
      b.system = content;
    } else if (section == "user") {
      b.user = content;
    } else if (section == "repair") {
      b.repair = content;
    } else if (section == "example-input") {
      if (pending_input) throw FormatError("example-input without example-output");
      pending_input = content;
    } else if (section == "example-output") {
      if (!pending_input) throw FormatError("example-output without example-input");
      b.examples.emplace_back(*pending_input, content);
      pending_input.reset();
    } else {
      throw FormatError("unknown prompt section '" + section + "'");
    }
    body.clear();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("=== ", 0) == 0) {
      flush();
      section = line.substr(4);
      while (!section.empty() && std::isspace(static_cast<unsigned char>(section.back()))) section.pop_back();
      continue;
    }
    body += line;
    body += '\n';
  }
  flush();
  if (pending_input) throw FormatError("example-input without example-output");
  if (b.user.empty()) throw FormatError("prompt needs a user section");
  return b;
}

PromptBundle load_prompt_bundle(const fs::path& path) { return parse_prompt_bundle(slurp(path)); }

namespace {

// Pulls the first "(define (problem ...))" out of free text and parses it.
ProblemDef extract_problem(const std::string& text, const DomainDef& domain) {
  for (const auto& [begin, end] : detail::find_lists_with_head(text, "define")) {
    const std::string_view candidate = std::string_view(text).substr(begin, end - begin);
    if (candidate.find("problem") == std::string_view::npos) continue;
    return parse_problem(candidate, domain);
  }
  throw SyntaxError(1, 1, "no (define (problem ...)) block in the completion");
}

}  // namespace

ProblemDef formulate_problem(const std::string& scene_description, const std::string& goal_task,
                             const DomainDef& domain, LlmGateway& gateway,
                             const PromptBundle& bundle, std::uint64_t seed) {
  std::vector<ChatMessage> msgs = bundle.render(
      {{"domain", serialize(domain)}, {"scene", scene_description}, {"goal_task", goal_task}});
  std::string error;
  for (int round = 0; round < 2; ++round) {
    const Completion c = gateway.complete(gateway.make_request(msgs, seed)).front();
    try {
      return extract_problem(c.text, domain);
    } catch (const Error& e) {
      if (dynamic_cast<const SyntaxError*>(&e) == nullptr &&
          dynamic_cast<const SemanticError*>(&e) == nullptr &&
          dynamic_cast<const UnsupportedFeature*>(&e) == nullptr) {
        throw;
      }
      error = e.what();
    }
    msgs.push_back({"assistant", c.text});
    const std::string repair =
        bundle.repair.empty() ? "The problem PDDL is invalid: {{error}}\nReply with a corrected problem."
                              : bundle.repair;
    msgs.push_back({"user", render_template(repair, {{"error", error}})});
  }
  throw MalformedOutput("problem formulation still invalid after one repair round: " + error);
}

SubgoalSequence decompose_goal(const DomainDef& domain, const ProblemDef& problem,
                               LlmGateway& gateway, const PromptBundle& bundle,
                               std::uint64_t seed) {
  const std::vector<ChatMessage> msgs =
      bundle.render({{"domain", serialize(domain)}, {"problem", serialize(problem)}});
  const Completion c = gateway.complete(gateway.make_request(msgs, seed)).front();
  SubgoalSequence seq;
  seq.provenance = Provenance::kLlm;
  try {
    seq.subgoals = parse_goal_blocks(c.text, domain, problem);
  } catch (const SyntaxError& e) {
    throw MalformedOutput(std::string("subgoal block: ") + e.what());
  } catch (const SemanticError& e) {
    throw MalformedOutput(std::string("subgoal block: ") + e.what());
  } catch (const UnsupportedFeature& e) {
    throw MalformedOutput(std::string("subgoal block: ") + e.what());
  }
  if (seq.subgoals.empty()) throw MalformedOutput("completion contains no (:goal ...) block");
  if (!seq.subgoals.back().entails(problem.goal)) {
    throw FinalSubgoalMismatch("last subgoal does not contain every goal literal");
  }
  return seq;
}

namespace {

class LlmDecomposer final : public Decomposer {
 public:
  LlmDecomposer(std::shared_ptr<LlmGateway> gateway, PromptBundle bundle)
      : gateway_(std::move(gateway)), bundle_(std::move(bundle)) {}
  std::string name() const override { return "llm"; }
  SubgoalSequence decompose(const DomainDef& domain, const ProblemDef& problem) override {
    return decompose_goal(domain, problem, *gateway_, bundle_);
  }

 private:
  std::shared_ptr<LlmGateway> gateway_;
  PromptBundle bundle_;
};

const std::regex& numbering() {
  static const std::regex re(R"(^\s*(?:step\s*)?\d+\s*[:.)]\s*)", std::regex::icase);
  return re;
}

}  // namespace

std::unique_ptr<Decomposer> llm_decomposer(std::shared_ptr<LlmGateway> gateway, PromptBundle bundle) {
  return std::make_unique<LlmDecomposer>(std::move(gateway), std::move(bundle));
}

WeightedPlan weigh_completion(const std::string& text,
                              const std::optional<std::vector<TokenLogprob>>& tokens,
                              std::size_t sample_id) {
  WeightedPlan plan;
  plan.sample_id = sample_id;

  // Token start offsets, when the tokens spell out the text exactly.
  std::optional<std::vector<std::pair<std::size_t, double>>> starts;
  if (tokens) {
    std::vector<std::pair<std::size_t, double>> s;
    std::string joined;
    for (const auto& t : *tokens) {
      s.emplace_back(joined.size(), t.logprob);
      joined += t.text;
    }
    if (joined == text) starts = std::move(s);
  }
  plan.missing_logprobs = !starts;

  std::size_t line_start = 0;
  std::size_t next_token = 0;
  while (line_start < text.size()) {
    std::size_t nl = text.find('\n', line_start);
    const std::size_t line_end = nl == std::string::npos ? text.size() : nl + 1;
    std::string line = text.substr(line_start, (nl == std::string::npos ? text.size() : nl) - line_start);

    double weight = 0.0;
    if (starts) {
      while (next_token < starts->size() && (*starts)[next_token].first < line_end) {
        weight += (*starts)[next_token].second;
        ++next_token;
      }
    }
    line_start = line_end;

    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line[0] == ';' || line.rfind("```", 0) == 0) continue;
    line = std::regex_replace(line, numbering(), "", std::regex_constants::format_first_only);
    const auto comment = line.find(';');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const auto parts = split_display_form(line);
    if (!parts || parts->empty()) break;
    std::string display = "(";
    for (std::size_t i = 0; i < parts->size(); ++i) {
      if (i) display += ' ';
      display += (*parts)[i];
    }
    display += ')';
    plan.steps.push_back(WeightedStep{display, weight});
  }
  return plan;
}

namespace {

class LlmPlanSampler final : public PlanSampler {
 public:
  LlmPlanSampler(std::shared_ptr<LlmGateway> gateway, PromptBundle bundle)
      : gateway_(std::move(gateway)), bundle_(std::move(bundle)) {}

  std::string name() const override { return "llm"; }

  std::vector<WeightedPlan> sample(const SampleRequest& req) override {
    if (req.sub == nullptr || req.n_s < 1) throw ConfigError("malformed sample request");
    const std::vector<ChatMessage> msgs = bundle_.render(
        {{"domain", serialize(req.sub->domain())}, {"problem", serialize(req.sub->problem)}});
    std::vector<Completion> completions;
    try {
      if (gateway_->config().multi_choice) {
        completions = gateway_->complete(
            gateway_->make_request(msgs, req.seed, static_cast<unsigned>(req.n_s)));
      } else {
        completions = sequential_or_parallel(msgs, req);
      }
    } catch (const TransportError& e) {
      throw SamplerUnavailable(std::string("plan sampling: ") + e.what());
    } catch (const BudgetExceeded& e) {
      throw SamplerUnavailable(std::string("plan sampling: ") + e.what());
    }
    if (completions.size() < req.n_s) {
      throw SamplerUnavailable("endpoint returned " + std::to_string(completions.size()) +
                               " choices, wanted " + std::to_string(req.n_s));
    }
    std::vector<WeightedPlan> out;
    for (std::size_t k = 0; k < req.n_s; ++k) {
      out.push_back(weigh_completion(completions[k].text, completions[k].tokens, k));
    }
    return out;
  }

 private:
  std::vector<Completion> sequential_or_parallel(const std::vector<ChatMessage>& msgs,
                                                 const SampleRequest& req) {
    std::vector<Completion> out(req.n_s);
    const std::size_t width = std::max<std::size_t>(1, gateway_->config().parallelism);
    for (std::size_t base = 0; base < req.n_s; base += width) {
      std::vector<std::future<Completion>> batch;
      for (std::size_t k = base; k < std::min(req.n_s, base + width); ++k) {
        const ChatRequest r = gateway_->make_request(msgs, derive_seed(req.seed, k));
        batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async,
                                   [this, r] { return gateway_->complete(r).front(); }));
      }
      for (std::size_t i = 0; i < batch.size(); ++i) out[base + i] = batch[i].get();
    }
    return out;
  }

  std::shared_ptr<LlmGateway> gateway_;
  PromptBundle bundle_;
};

}  // namespace

std::unique_ptr<PlanSampler> llm_plan_sampler(std::shared_ptr<LlmGateway> gateway,
                                              PromptBundle bundle) {
  if (!gateway) throw ConfigError("plan sampler needs a gateway");
  if (!gateway->config().logprobs) throw ConfigError("plan sampling needs logprobs enabled");
  return std::make_unique<LlmPlanSampler>(std::move(gateway), std::move(bundle));
}

}  // namespace nstp
