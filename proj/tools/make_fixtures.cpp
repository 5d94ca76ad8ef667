// Records the model cassettes under tests/fixtures from a scripted
// endpoint: problem formulation for known scenes, the scripted decomposer
// for subgoals, and the perturbed oracle for plans, tokenized with
// pseudo-random log-probabilities. Also writes the per-action weights the
// responder assigned, summed line by line while it built each completion.
//
//   make_fixtures <repo-root>

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nstp/bench.hpp"
#include "nstp/domains.hpp"
#include "nstp/llm.hpp"
#include "nstp/random.hpp"
#include "nstp/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Words keep their leading space; ")" swallows the newline after it so that
// some tokens straddle a line break.
std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    if (text[j] == ' ') ++j;
    if (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '-')) {
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '-')) {
        ++j;
      }
    } else if (j < text.size()) {
      ++j;
      if (text[j - 1] == ')' && j < text.size() && text[j] == '\n') ++j;
    }
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

class Responder {
 public:
  explicit Responder(const fs::path& prompts)
      : formulate_(nstp::load_prompt_bundle(prompts / "formulate.prompt")),
        decompose_(nstp::load_prompt_bundle(prompts / "decompose.prompt")),
        plan_(nstp::load_prompt_bundle(prompts / "plan.prompt")) {}

  json operator()(const json& request) {
    const auto& msgs = request.at("messages");
    const std::string system = msgs.at(0).at("content");
    const std::string user = msgs.back().at("content");
    const unsigned n = request.value("n", 1u);
    const std::uint64_t seed = request.value("seed", std::uint64_t{0});
    const std::string hash = nstp::request_hash(request);

    json choices = json::array();
    json weights = json::array();
    for (unsigned k = 0; k < n; ++k) {
      const std::uint64_t s = n == 1 ? seed : nstp::derive_seed(seed, k);
      std::string text;
      bool is_plan = false;
      if (system == formulate_.system) {
        text = formulate(msgs);
      } else if (system == decompose_.system) {
        text = decompose(user);
      } else if (system == plan_.system) {
        text = plan(user, s);
        is_plan = true;
      } else {
        throw std::runtime_error("unrecognized prompt");
      }
      choices.push_back(choice(text, s, k, is_plan ? &weights : nullptr));
    }
    if (!weights.empty()) weights_[hash] = weights;
    return {{"id", "fixture-" + hash},
            {"object", "chat.completion"},
            {"model", request.at("model")},
            {"choices", choices}};
  }

  const json& weights() const { return weights_; }

 private:
  // Scenes the fixture endpoint knows. "typo" scenes answer with an
  // invalid problem first and fix it when asked to repair.
  std::string formulate(const json& msgs) {
    const std::size_t first_user = 1 + 2 * formulate_.examples.size();
    const bool repair = msgs.size() > first_user + 1;
    const std::string user = msgs.at(first_user).at("content");
    if (user.find("blocks b1 on b2, b2 on table position t1") != std::string::npos) {
      const bool typo = user.find("typo") != std::string::npos;
      if (typo && !repair) {
        return "Here is the problem.\n(define (problem reverse)\n  (:domain blocksworld-new)\n"
               "  (:objects b1 b2 - block t1 t2 - position)\n"
               "  (:init (on b1 b2) (on-table b2 t9) (clear b1) (clear-table t2) (arm-empty))\n"
               "  (:goal (and (on b2 b1))))\n";
      }
      return "(define (problem reverse)\n  (:domain blocksworld-new)\n"
             "  (:objects b1 b2 - block t1 t2 - position)\n"
             "  (:init (on b1 b2) (on-table b2 t1) (clear b1) (clear-table t2) (arm-empty))\n"
             "  (:goal (and (on b2 b1))))\n";
    }
    return "I cannot describe this scene as a planning problem.";
  }

  static std::pair<nstp::DomainDef, nstp::ProblemDef> read_task(const std::string& user) {
    const auto mid = user.find("\n\nProblem:\n");
    const auto head = user.find("Domain:\n");
    if (mid == std::string::npos || head == std::string::npos) {
      throw std::runtime_error("prompt without domain and problem");
    }
    nstp::DomainDef d = nstp::parse_domain(user.substr(head + 8, mid - head - 8));
    nstp::ProblemDef p = nstp::parse_problem(user.substr(mid + 11), d);
    return {std::move(d), std::move(p)};
  }

  std::string decompose(const std::string& user) {
    const auto [domain, problem] = read_task(user);
    const nstp::SubgoalSequence seq = nstp::scripted_decomposer(domain.name)->decompose(domain, problem);
    return "Subgoals:\n" + nstp::serialize_subgoals(seq);
  }

  std::string plan(const std::string& user, std::uint64_t seed) {
    auto [domain, problem] = read_task(user);
    const nstp::SubProblem sub =
        nstp::make_subproblem(std::make_shared<const nstp::DomainDef>(domain), problem);
    const auto plans = oracle_->sample(nstp::SampleRequest{&sub, 1, seed});
    nstp::Rng rng(seed ^ 0x706c616eULL);
    const std::size_t style = rng.below(3);
    std::string text;
    if (style == 2) text += "```\n";
    for (std::size_t i = 0; i < plans[0].steps.size(); ++i) {
      if (style == 1) text += std::to_string(i + 1) + ". ";
      text += plans[0].steps[i].action + "\n";
    }
    if (style == 2) text += "```\n";
    if (rng.below(4) == 0) text += "That completes the plan.\n";
    return text;
  }

  // Per-action weights are summed here, per line, in token order.
  json choice(const std::string& text, std::uint64_t seed, unsigned index, json* weight_log) {
    nstp::Rng rng(seed ^ 0x746f6b73ULL);
    json content = json::array();
    std::vector<double> line_sums;
    double current = 0.0;
    std::size_t offset = 0;
    std::size_t line_start = 0;
    auto close_line = [&](std::size_t end) {
      if (text.substr(line_start, end - line_start).find('(') != std::string::npos) {
        line_sums.push_back(current);
      }
      current = 0.0;
    };
    for (const auto& tok : tokenize(text)) {
      const double lp = -2.0 * rng.uniform();
      content.push_back({{"token", tok}, {"logprob", lp}});
      current += lp;
      offset += tok.size();
      if (!tok.empty() && tok.back() == '\n') {
        close_line(offset);
        line_start = offset;
      }
    }
    if (line_start < text.size()) close_line(text.size());
    if (weight_log) weight_log->push_back({{"choice", index}, {"weights", line_sums}});
    return {{"index", index},
            {"message", {{"role", "assistant"}, {"content", text}}},
            {"logprobs", {{"content", content}}},
            {"finish_reason", "stop"}};
  }

  nstp::PromptBundle formulate_, decompose_, plan_;
  std::unique_ptr<nstp::PlanSampler> oracle_ =
      nstp::perturbed_oracle_sampler(nstp::NoiseModel{0.2, 0.2, 0.2});
  json weights_ = json::object();
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <repo-root>\n";
    return 2;
  }
  const fs::path root = argv[1];
  const fs::path fixtures = root / "tests" / "fixtures";
  const fs::path prompts = root / "prompts";
  try {
    auto responder = std::make_shared<Responder>(prompts);
    auto endpoint = nstp::function_transport([responder](const json& r) { return (*responder)(r); });

    // Gateway operations.
    const fs::path gateway_cassette = fixtures / "gateway-cassette.json";
    fs::remove(gateway_cassette);
    auto gw = std::make_shared<nstp::LlmGateway>(
        nstp::LlmConfig{}, nstp::recording_transport(endpoint, gateway_cassette));
    const nstp::Instance bw = nstp::generate(nstp::GenSpec{nstp::DomainKind::kBlocksworld, 3, 0});
    const nstp::ProblemDef reverse =
        nstp::parse_problem(read_file(fixtures / "bw3-reverse-problem.pddl"), bw.domain);

    const auto formulate = nstp::load_prompt_bundle(prompts / "formulate.prompt");
    nstp::formulate_problem("blocks b1 on b2, b2 on table position t1", "reverse the stack",
                            bw.domain, *gw, formulate);
    nstp::formulate_problem("blocks b1 on b2, b2 on table position t1 (typo)", "reverse the stack",
                            bw.domain, *gw, formulate);
    try {
      nstp::formulate_problem("a kitchen counter", "make coffee", bw.domain, *gw, formulate);
    } catch (const nstp::MalformedOutput&) {
    }
    nstp::decompose_goal(bw.domain, reverse, *gw,
                         nstp::load_prompt_bundle(prompts / "decompose.prompt"));
    const nstp::SubProblem sub =
        nstp::make_subproblem(std::make_shared<const nstp::DomainDef>(bw.domain), reverse);
    nstp::llm_plan_sampler(gw, nstp::load_prompt_bundle(prompts / "plan.prompt"))
        ->sample(nstp::SampleRequest{&sub, 4, 0});

    // Bench rows for the model-backed methods.
    const fs::path bench_cassette = fixtures / "bench-llm-cassette.json";
    fs::remove(bench_cassette);
    nstp::BenchOptions options;
    options.mask_timing = true;
    options.workers = 1;
    options.prompts_dir = prompts;
    options.llm_transport = nstp::recording_transport(endpoint, bench_cassette);
    std::ofstream csv(fixtures / "bench-llm.csv", std::ios::binary);
    const auto summary = nstp::run_bench(nstp::load_suite(fixtures / "bench-llm-suite.json"), csv,
                                         options);

    std::ofstream(fixtures / "expected-weights.json", std::ios::binary)
        << responder->weights().dump(1) << "\n";
    std::cerr << "recorded " << nstp::Cassette::load(gateway_cassette).size() << " + "
              << nstp::Cassette::load(bench_cassette).size() << " exchanges, " << summary.solved
              << "/" << summary.jobs << " bench rows solved\n";
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
