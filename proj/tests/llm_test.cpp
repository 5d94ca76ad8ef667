#include <gtest/gtest.h>

#include <atomic>
#include <cstdio>

#include "nstp/domains.hpp"
#include "nstp/error.hpp"
#include "nstp/llm.hpp"
#include "support.hpp"

namespace nstp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path prompts_dir() { return test::source_dir() / "prompts"; }

struct Env {
  DomainDef domain = generate(GenSpec{DomainKind::kBlocksworld, 3, 0}).domain;
  ProblemDef reverse =
      parse_problem(test::read_text(test::fixtures_dir() / "bw3-reverse-problem.pddl"), domain);
};

std::shared_ptr<LlmGateway> replay_gateway(LlmConfig config = {}) {
  return std::make_shared<LlmGateway>(
      config, replay_transport(Cassette::load(test::fixtures_dir() / "gateway-cassette.json")));
}

json reply(const std::vector<std::string>& texts) {
  json choices = json::array();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", texts[i]}}}});
  }
  return {{"choices", choices}};
}

// Scripted endpoint that answers every request with the same text.
std::shared_ptr<LlmGateway> stub(const std::string& text) {
  return std::make_shared<LlmGateway>(LlmConfig{},
                                      function_transport([text](const json&) { return reply({text}); }));
}

Literal pos(std::string p, std::vector<std::string> args) { return Literal{Atom{std::move(p), std::move(args)}, true}; }

// ---------------------------------------------------------------------------
// Wire format and cassettes

TEST(Request, JsonShape) {
  const ChatRequest r{"gpt-4o", {{"system", "s"}, {"user", "u"}}, 0.0, true, 2, 9};
  const json j = r.to_json();
  EXPECT_EQ(j["model"], "gpt-4o");
  EXPECT_EQ(j["messages"][1]["role"], "user");
  EXPECT_EQ(j["messages"][1]["content"], "u");
  EXPECT_EQ(j["temperature"], 0.0);
  EXPECT_EQ(j["logprobs"], true);
  EXPECT_EQ(j["n"], 2);
  EXPECT_EQ(j["seed"], 9);
}

TEST(Request, HashIsFnv1aOfTheDump) {
  const json j = ChatRequest{"m", {{"user", "hello"}}, 0.0, true, 1, 0}.to_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char expected[17];
  std::snprintf(expected, sizeof expected, "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(request_hash(j), expected);
  json k = j;
  k["seed"] = 1;
  EXPECT_NE(request_hash(k), request_hash(j));
}

TEST(CassetteFile, PutReplacesAndRoundTrips) {
  Cassette c;
  c.put("aa", json{{"x", 1}});
  c.put("bb", json{{"x", 2}});
  c.put("aa", json{{"x", 3}});
  EXPECT_EQ(c.size(), 2u);
  const fs::path p = fs::temp_directory_path() / ("nstp-cassette-" + std::to_string(::getpid()) + ".json");
  c.save(p);
  const Cassette back = Cassette::load(p);
  ASSERT_NE(back.find("aa"), nullptr);
  EXPECT_EQ((*back.find("aa"))["x"], 3);
  EXPECT_EQ(back.find("cc"), nullptr);
  const json raw = json::parse(test::read_text(p));
  ASSERT_TRUE(raw.is_array());
  EXPECT_TRUE(raw[0].contains("request-hash"));
  EXPECT_TRUE(raw[0].contains("response-body"));
  fs::remove(p);
  EXPECT_THROW(Cassette::load(p), IoError);
}

TEST(CassetteFile, ReplayMissIsTransportError) {
  LlmGateway gw(LlmConfig{}, replay_transport(Cassette{}));
  EXPECT_THROW(gw.complete(gw.make_request({{"user", "hi"}}, 0)), TransportError);
}

TEST(CassetteFile, RecordingThenReplay) {
  const fs::path p = fs::temp_directory_path() / ("nstp-record-" + std::to_string(::getpid()) + ".json");
  fs::remove(p);
  std::atomic<int> calls{0};
  auto inner = function_transport([&](const json& r) {
    ++calls;
    return reply({"echo " + r["messages"][0]["content"].get<std::string>()});
  });
  LlmGateway live(LlmConfig{}, recording_transport(inner, p));
  const auto a = live.complete(live.make_request({{"user", "one"}}, 0));
  live.complete(live.make_request({{"user", "two"}}, 0));
  EXPECT_EQ(calls, 2);
  LlmGateway replay(LlmConfig{}, replay_transport(Cassette::load(p)));
  const auto b = replay.complete(replay.make_request({{"user", "one"}}, 0));
  EXPECT_EQ(b[0].text, a[0].text);
  EXPECT_EQ(b[0].text, "echo one");
  EXPECT_EQ(calls, 2);
  fs::remove(p);
}

// ---------------------------------------------------------------------------
// Gateway error handling

TEST(Gateway, RetriesThenSucceeds) {
  struct Flaky : Transport {
    int calls = 0;
    HttpResponse post(const json&) override {
      ++calls;
      if (calls < 3) return {calls == 1 ? 429 : 503, json::object()};
      return {200, reply({"ok"})};
    }
  };
  auto t = std::make_shared<Flaky>();
  LlmConfig c;
  c.max_retries = 2;
  LlmGateway gw(c, t);
  EXPECT_EQ(gw.complete(gw.make_request({{"user", "x"}}, 0))[0].text, "ok");
  EXPECT_EQ(t->calls, 3);
}

TEST(Gateway, RetriesUsedUpIsBudgetExceeded) {
  struct Busy : Transport {
    int calls = 0;
    HttpResponse post(const json&) override {
      ++calls;
      return {429, json::object()};
    }
  };
  auto t = std::make_shared<Busy>();
  LlmConfig c;
  c.max_retries = 1;
  LlmGateway gw(c, t);
  EXPECT_THROW(gw.complete(gw.make_request({{"user", "x"}}, 0)), BudgetExceeded);
  EXPECT_EQ(t->calls, 2);
}

TEST(Gateway, ClientErrorIsTransportError) {
  struct Denied : Transport {
    HttpResponse post(const json&) override { return {401, json{{"error", "bad key"}}}; }
  };
  LlmGateway gw(LlmConfig{}, std::make_shared<Denied>());
  EXPECT_THROW(gw.complete(gw.make_request({{"user", "x"}}, 0)), TransportError);
}

TEST(Gateway, UnreadableBodyIsMalformedOutput) {
  LlmGateway gw(LlmConfig{}, function_transport([](const json&) { return json{{"choices", 3}}; }));
  EXPECT_THROW(gw.complete(gw.make_request({{"user", "x"}}, 0)), MalformedOutput);
}

TEST(Gateway, UnreachableEndpointIsTransportError) {
  LlmConfig c;
  c.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
  c.request_timeout = std::chrono::milliseconds{500};
  c.max_retries = 0;
  LlmGateway gw(c, http_transport(c));
  EXPECT_THROW(gw.complete(gw.make_request({{"user", "x"}}, 0)), TransportError);
}

TEST(Gateway, ConfigChecked) {
  LlmConfig c;
  c.temperature = -1.0;
  EXPECT_THROW(c.check(), ConfigError);
}

// ---------------------------------------------------------------------------
// Prompt assets

TEST(Prompts, TemplateRendering) {
  EXPECT_EQ(render_template("a {{x}} b {{y}} {{x}}", {{"x", "1"}}), "a 1 b {{y}} 1");
}

TEST(Prompts, BundleParsingAndRendering) {
  const PromptBundle b = parse_prompt_bundle(
      "# header\n=== system\nS\n=== example-input\nI1\n=== example-output\nO1\n=== user\nU {{v}}\n");
  EXPECT_EQ(b.system, "S");
  ASSERT_EQ(b.examples.size(), 1u);
  const auto msgs = b.render({{"v", "z"}});
  ASSERT_EQ(msgs.size(), 4u);
  EXPECT_EQ(msgs[0].role, "system");
  EXPECT_EQ(msgs[1].role, "user");
  EXPECT_EQ(msgs[1].content, "I1");
  EXPECT_EQ(msgs[2].role, "assistant");
  EXPECT_EQ(msgs[3].content, "U z");
  EXPECT_THROW(parse_prompt_bundle("=== system\nS\n"), FormatError);
  EXPECT_THROW(parse_prompt_bundle("=== user\nU\n=== bogus\nx\n"), FormatError);
}

TEST(Prompts, ShippedAssetsHaveTheExpectedShots) {
  EXPECT_EQ(load_prompt_bundle(prompts_dir() / "formulate.prompt").examples.size(), 1u);
  EXPECT_FALSE(load_prompt_bundle(prompts_dir() / "formulate.prompt").repair.empty());
  EXPECT_EQ(load_prompt_bundle(prompts_dir() / "decompose.prompt").examples.size(), 1u);
  const auto plan = load_prompt_bundle(prompts_dir() / "plan.prompt").examples.size();
  EXPECT_GE(plan, 2u);
  EXPECT_LE(plan, 3u);
}

// ---------------------------------------------------------------------------
// Operations against the recorded cassette

TEST(Formulate, RecordedScene) {
  Env env;
  auto gw = replay_gateway();
  const ProblemDef p = formulate_problem("blocks b1 on b2, b2 on table position t1", "reverse the stack",
                                         env.domain, *gw, load_prompt_bundle(prompts_dir() / "formulate.prompt"));
  EXPECT_TRUE(p.init.contains(Atom{"on", {"b1", "b2"}}));
  EXPECT_TRUE(p.init.contains(Atom{"on-table", {"b2", "t1"}}));
}

TEST(Formulate, RepairRoundFixesTheTypo) {
  Env env;
  auto gw = replay_gateway();
  const ProblemDef p =
      formulate_problem("blocks b1 on b2, b2 on table position t1 (typo)", "reverse the stack", env.domain, *gw,
                        load_prompt_bundle(prompts_dir() / "formulate.prompt"));
  EXPECT_TRUE(p.init.contains(Atom{"on-table", {"b2", "t1"}}));
}

TEST(Formulate, ProseAfterRepairIsMalformed) {
  Env env;
  auto gw = replay_gateway();
  EXPECT_THROW(formulate_problem("a kitchen counter", "make coffee", env.domain, *gw,
                                 load_prompt_bundle(prompts_dir() / "formulate.prompt")),
               MalformedOutput);
  EXPECT_THROW(formulate_problem("unseen", "task", env.domain, *gw,
                                 load_prompt_bundle(prompts_dir() / "formulate.prompt")),
               TransportError);
}

TEST(Decompose, RecordedReversalStartsWithClearAll) {
  Env env;
  auto gw = replay_gateway();
  const SubgoalSequence seq =
      decompose_goal(env.domain, env.reverse, *gw, load_prompt_bundle(prompts_dir() / "decompose.prompt"));
  ASSERT_GE(seq.subgoals.size(), 2u);
  EXPECT_EQ(seq.subgoals[0],
            GoalCond({pos("clear", {"b1"}), pos("clear", {"b2"}), pos("clear", {"b3"}), pos("clear-table", {"t1"})}));
  EXPECT_TRUE(seq.subgoals.back().entails(env.reverse.goal));
  EXPECT_EQ(seq.provenance, Provenance::kLlm);
}

TEST(Decompose, SingleGoalBlockIsValid) {
  Env env;
  auto gw = stub("(:goal (and (on-table b3 t1) (on b2 b3) (on b1 b2)))");
  const SubgoalSequence seq =
      decompose_goal(env.domain, env.reverse, *gw, load_prompt_bundle(prompts_dir() / "decompose.prompt"));
  ASSERT_EQ(seq.subgoals.size(), 1u);
  EXPECT_EQ(seq.subgoals[0], env.reverse.goal);
}

TEST(Decompose, MissingGoalLiteralIsMismatch) {
  Env env;
  auto gw = stub("(:goal (and (clear b1)))\n(:goal (and (on-table b3 t1) (on b2 b3)))");
  EXPECT_THROW(decompose_goal(env.domain, env.reverse, *gw, load_prompt_bundle(prompts_dir() / "decompose.prompt")),
               FinalSubgoalMismatch);
}

TEST(Decompose, NoBlocksOrBadBlocksAreMalformed) {
  Env env;
  const auto bundle = load_prompt_bundle(prompts_dir() / "decompose.prompt");
  EXPECT_THROW(decompose_goal(env.domain, env.reverse, *stub("I would stack them."), bundle), MalformedOutput);
  EXPECT_THROW(decompose_goal(env.domain, env.reverse, *stub("(:goal (and (on b9 b1)))"), bundle), MalformedOutput);
}

// ---------------------------------------------------------------------------
// Weights

TEST(Weigh, LineSumOfTokenLogprobs) {
  const std::string text = "(pick-up b1 t1)\n";
  const WeightedPlan p = weigh_completion(text, std::vector<TokenLogprob>{{"(pick-up b1", -0.1}, {" t1)\n", -0.2}}, 0);
  ASSERT_EQ(p.steps.size(), 1u);
  EXPECT_EQ(p.steps[0].weight, -0.1 + -0.2);
  EXPECT_NEAR(p.steps[0].weight, -0.3, 1e-15);
  EXPECT_FALSE(p.missing_logprobs);
}

TEST(Weigh, BoundaryTokenBelongsToTheEarlierLine) {
  const std::string text = "(a)\n(b)\n";
  const WeightedPlan p = weigh_completion(
      text, std::vector<TokenLogprob>{{"(a", -1.0}, {")\n(", -2.0}, {"b", -4.0}, {")\n", -8.0}}, 0);
  ASSERT_EQ(p.steps.size(), 2u);
  EXPECT_EQ(p.steps[0].weight, -3.0);
  EXPECT_EQ(p.steps[1].weight, -12.0);
}

TEST(Weigh, ProseOnThirdLineTruncates) {
  const WeightedPlan p =
      weigh_completion("(unstack b3 b2)\n(put-down b3 t2)\nthen we are done\n(pick-up b2 b1)\n", std::nullopt, 4);
  ASSERT_EQ(p.steps.size(), 2u);
  EXPECT_EQ(p.sample_id, 4u);
  EXPECT_TRUE(p.missing_logprobs);
  for (const auto& s : p.steps) EXPECT_EQ(s.weight, 0.0);
}

TEST(Weigh, NumberingFencesAndCommentsAreSkipped) {
  const WeightedPlan p =
      weigh_completion("```\n; plan\n1. (Unstack b3 b2)\nStep 2: (put-down b3 t2) ; free\n```\n", std::nullopt, 0);
  ASSERT_EQ(p.steps.size(), 2u);
  EXPECT_EQ(p.steps[0].action, "(unstack b3 b2)");
  EXPECT_EQ(p.steps[1].action, "(put-down b3 t2)");
}

TEST(Weigh, TokensThatDoNotSpellTheTextAreIgnored) {
  const WeightedPlan p = weigh_completion("(a)\n", std::vector<TokenLogprob>{{"(b)\n", -1.0}}, 0);
  EXPECT_TRUE(p.missing_logprobs);
  EXPECT_EQ(p.steps[0].weight, 0.0);
}

TEST(Weights, CassetteLogprobsMatchStoredValues) {
  const json cassette = json::parse(test::read_text(test::fixtures_dir() / "gateway-cassette.json"));
  const json expected = json::parse(test::read_text(test::fixtures_dir() / "expected-weights.json"));
  std::size_t checked = 0;
  for (const auto& entry : cassette) {
    const std::string hash = entry.at("request-hash");
    if (!expected.contains(hash)) continue;
    const auto sums = test::cassette_line_sums(entry.at("response-body"));
    ASSERT_EQ(sums.size(), expected[hash].size());
    for (std::size_t c = 0; c < sums.size(); ++c) {
      EXPECT_EQ(sums[c], expected[hash][c]["weights"].get<std::vector<double>>());
    }
    ++checked;
  }
  EXPECT_EQ(checked, 4u);
}

TEST(Sampler, FourPlansFromTheCassette) {
  Env env;
  auto gw = replay_gateway();
  const SubProblem sub = make_subproblem(std::make_shared<const DomainDef>(env.domain), env.reverse);
  auto sampler = llm_plan_sampler(gw, load_prompt_bundle(prompts_dir() / "plan.prompt"));
  const auto a = sampler->sample(SampleRequest{&sub, 4, 0});
  const auto b = sampler->sample(SampleRequest{&sub, 4, 0});
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);

  // Each plan's weights equal the stored per-line sums of its request.
  const json expected = json::parse(test::read_text(test::fixtures_dir() / "expected-weights.json"));
  const auto bundle = load_prompt_bundle(prompts_dir() / "plan.prompt");
  const auto messages = bundle.render({{"domain", serialize(env.domain)}, {"problem", serialize(env.reverse)}});
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::string hash = request_hash(gw->make_request(messages, derive_seed(0, k)).to_json());
    ASSERT_TRUE(expected.contains(hash)) << k;
    const auto stored = expected[hash][0]["weights"].get<std::vector<double>>();
    ASSERT_EQ(a[k].steps.size(), stored.size());
    for (std::size_t i = 0; i < stored.size(); ++i) EXPECT_EQ(a[k].steps[i].weight, stored[i]);
    EXPECT_FALSE(a[k].missing_logprobs);
  }
}

TEST(Sampler, TransportFailureIsSamplerUnavailable) {
  Env env;
  const SubProblem sub = make_subproblem(std::make_shared<const DomainDef>(env.domain), env.reverse);
  auto gw = std::make_shared<LlmGateway>(LlmConfig{}, replay_transport(Cassette{}));
  auto sampler = llm_plan_sampler(gw, load_prompt_bundle(prompts_dir() / "plan.prompt"));
  EXPECT_THROW(sampler->sample(SampleRequest{&sub, 2, 0}), SamplerUnavailable);
}

TEST(Sampler, MultiChoiceAndMissingLogprobs) {
  Env env;
  const SubProblem sub = make_subproblem(std::make_shared<const DomainDef>(env.domain), env.reverse);
  std::vector<unsigned> seen_n;
  LlmConfig c;
  c.multi_choice = true;
  auto gw = std::make_shared<LlmGateway>(c, function_transport([&](const json& r) {
                                           seen_n.push_back(r["n"].get<unsigned>());
                                           return reply({"(unstack b3 b2)\n", "(unstack b3 b2)\n(put-down b3 t2)\n",
                                                         "nothing to do"});
                                         }));
  const auto plans = llm_plan_sampler(gw, load_prompt_bundle(prompts_dir() / "plan.prompt"))
                         ->sample(SampleRequest{&sub, 3, 0});
  EXPECT_EQ(seen_n, std::vector<unsigned>{3});
  ASSERT_EQ(plans.size(), 3u);
  EXPECT_EQ(plans[1].steps.size(), 2u);
  EXPECT_TRUE(plans[2].steps.empty());
  for (const auto& p : plans) EXPECT_TRUE(p.missing_logprobs);
}

TEST(Sampler, LogprobsRequired) {
  LlmConfig c;
  c.logprobs = false;
  auto gw = std::make_shared<LlmGateway>(c, replay_transport(Cassette{}));
  EXPECT_THROW(llm_plan_sampler(gw, load_prompt_bundle(prompts_dir() / "plan.prompt")), ConfigError);
}

}  // namespace
}  // namespace nstp
