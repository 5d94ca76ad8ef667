// nstp command-line entry point. JSON or CSV on stdout, diagnostics on
// stderr. Exit codes: 0 ok, 1 planning failure, 2 usage or configuration,
// 3 environment (missing binary, unreachable endpoint).

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nstp/bench.hpp"
#include "nstp/domains.hpp"
#include "nstp/error.hpp"
#include "nstp/llm.hpp"
#include "nstp/pipeline.hpp"
#include "nstp/sampling.hpp"
#include "nstp/search.hpp"
#include "nstp/validator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kPlanningFailure = 1, kUsage = 2, kEnvironment = 3 };

std::atomic<bool> g_interrupted{false};

void on_sigint(int) { g_interrupted.store(true); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw nstp::IoError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw nstp::IoError("cannot write " + p.string());
}

int exit_code_for(const nstp::Error& e) {
  const std::string& k = e.kind();
  if (k == "TransportError" || k == "ExternalUnavailable" || k == "BudgetExceeded" ||
      k == "IoError") {
    return kEnvironment;
  }
  if (k == "SubgoalUnsolved" || k == "AggregateValidationFailed" || k == "DecompositionFailed" ||
      k == "MalformedOutput" || k == "FinalSubgoalMismatch" || k == "ExternalFailure" ||
      k == "OracleUnsolvable") {
    return kPlanningFailure;
  }
  return kUsage;
}

struct LlmFlags {
  std::string cassette;
  bool record = false;
  std::string prompts = "prompts";
  std::string endpoint;
  std::string model;
  unsigned parallelism = 1;
  bool multi_choice = false;

  void add(CLI::App* app) {
    app->add_option("--cassette", cassette, "Replay model responses from this cassette");
    app->add_flag("--record", record, "Call the endpoint and append responses to --cassette");
    app->add_option("--prompts", prompts, "Directory holding the prompt assets");
    app->add_option("--endpoint", endpoint, "Chat-completions URL");
    app->add_option("--model", model, "Model name");
    app->add_option("--parallelism", parallelism, "Concurrent sampling requests");
    app->add_flag("--multi-choice", multi_choice, "One n-choice request per sampling call");
  }

  nstp::LlmConfig config() const {
    nstp::LlmConfig c;
    if (!endpoint.empty()) c.endpoint_url = endpoint;
    if (!model.empty()) c.model = model;
    c.parallelism = parallelism;
    c.multi_choice = multi_choice;
    return c;
  }

  std::shared_ptr<nstp::Transport> transport() const {
    const nstp::LlmConfig c = config();
    if (cassette.empty()) return nstp::http_transport(c);
    if (record) return nstp::recording_transport(nstp::http_transport(c), cassette);
    return nstp::replay_transport(nstp::Cassette::load(cassette));
  }
};

// ---------------------------------------------------------------- gen

int run_gen(const std::string& domain, int n, int count, std::uint64_t seed, const fs::path& out,
            bool force, bool cross) {
  const nstp::DomainKind kind = nstp::parse_domain_kind(domain);
  if (count < 0) throw nstp::ConfigError("--count must be >= 0");
  if (n < 1) throw nstp::ConfigError("--n must be >= 1");
  std::error_code ec;
  if (fs::exists(out, ec) && !fs::is_empty(out, ec) && !force) {
    std::cerr << "nstp gen: " << out << " is not empty; pass --force to write into it\n";
    return kUsage;
  }
  json files = json::array();
  if (count > 0) fs::create_directories(out);
  for (int i = 0; i < count; ++i) {
    const nstp::GenSpec spec{kind, n, seed + static_cast<std::uint64_t>(i), cross};
    const auto [d, p] = nstp::write_instance(spec, out);
    files.push_back({{"domain", d.string()}, {"problem", p.string()}});
  }
  std::cout << json{{"files", files}}.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- plan

struct PlanFlags {
  std::string domain_file, problem_file;
  std::string strategy = "auto";
  std::string sampler = "oracle";
  std::string decomposer = "scripted";
  std::string subgoals_file;
  std::string replay_dir;
  std::size_t n_s = 5;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::uint64_t max_iterations = 1000;
  unsigned retries = 2;
  std::string engine = "gbfs-hadd";
  std::int64_t symbolic_ms = 60'000;
  std::string trace_file;
  std::string plan_out;
  LlmFlags llm;
};

int run_plan(const PlanFlags& f) {
  const nstp::DomainDef domain = nstp::parse_domain(read_file(f.domain_file));
  const nstp::ProblemDef problem = nstp::parse_problem(read_file(f.problem_file), domain);

  nstp::PipelineConfig config;
  config.strategy = nstp::parse_strategy(f.strategy);
  config.n_s = f.n_s;
  config.seed = f.seed;
  config.mcts.max_iterations = f.max_iterations;
  config.retry_budget = f.retries;
  config.symbolic.mode = nstp::parse_search_mode(f.engine);
  config.symbolic.wall_clock_budget = std::chrono::milliseconds(f.symbolic_ms);

  std::shared_ptr<nstp::LlmGateway> gateway;
  auto need_gateway = [&] {
    if (!gateway) gateway = std::make_shared<nstp::LlmGateway>(f.llm.config(), f.llm.transport());
    return gateway;
  };

  std::unique_ptr<nstp::Decomposer> decomposer;
  if (f.decomposer == "scripted") {
    decomposer = nstp::scripted_decomposer(domain.name);
  } else if (f.decomposer == "none") {
    decomposer = nstp::scripted_decomposer("none");
  } else if (f.decomposer == "llm") {
    decomposer = nstp::llm_decomposer(
        need_gateway(), nstp::load_prompt_bundle(fs::path(f.llm.prompts) / "decompose.prompt"));
  } else if (f.decomposer == "file") {
    if (f.subgoals_file.empty()) throw nstp::ConfigError("--decomposer file needs --subgoals");
    decomposer = nstp::file_decomposer(read_file(f.subgoals_file));
  } else {
    throw nstp::ConfigError("unknown decomposer '" + f.decomposer + "'");
  }

  std::unique_ptr<nstp::PlanSampler> sampler;
  if (config.strategy != nstp::Strategy::kSymbolic) {
    if (f.sampler == "replay") {
      if (f.replay_dir.empty()) throw nstp::ConfigError("--sampler replay needs --replay-dir");
      sampler = nstp::replay_sampler(f.replay_dir);
    } else if (f.sampler == "oracle") {
      sampler = nstp::perturbed_oracle_sampler(nstp::NoiseModel{f.noise, f.noise, f.noise});
    } else if (f.sampler == "llm") {
      sampler = nstp::llm_plan_sampler(
          need_gateway(), nstp::load_prompt_bundle(fs::path(f.llm.prompts) / "plan.prompt"));
    } else {
      throw nstp::ConfigError("unknown sampler '" + f.sampler + "'");
    }
  }

  const bool trace = !f.trace_file.empty();
  auto emit = [&](const nstp::PipelineReport& report, const nstp::Error* error) {
    json j = nstp::to_json(report);
    const json trace_json = j.value("trace", json());
    j.erase("trace");
    if (error) {
      j["error"] = error->kind();
      j["message"] = error->what();
    }
    std::cout << j.dump(2) << "\n";
    if (trace) write_file(f.trace_file, trace_json.dump(2) + "\n");
    if (!f.plan_out.empty() && report.plan && !error) {
      write_file(f.plan_out, nstp::format_plan(*report.plan));
    }
  };
  try {
    const nstp::PipelineReport report =
        nstp::plan_task(domain, problem, config, *decomposer, sampler.get(), trace);
    emit(report, nullptr);
    return kOk;
  } catch (const nstp::PipelineError& e) {
    emit(e.report(), &e);
    std::cerr << "nstp plan: " << e.kind() << ": " << e.what() << "\n";
    return kPlanningFailure;
  }
}

// ---------------------------------------------------------------- solve

int run_solve(const std::string& domain_file, const std::string& problem_file,
              const std::string& engine, std::uint64_t max_expansions, std::int64_t ms,
              const std::string& planner_bin, const std::string& planner_search,
              const std::string& plan_out) {
  const nstp::DomainDef domain = nstp::parse_domain(read_file(domain_file));
  const nstp::ProblemDef problem = nstp::parse_problem(read_file(problem_file), domain);
  nstp::SearchResult r;
  if (engine == "external") {
    if (planner_bin.empty()) throw nstp::ConfigError("--engine external needs --planner");
    if (ms <= 0) throw nstp::ConfigError("--engine external needs --budget-ms");
    r = nstp::solve_via_external(domain_file, problem_file, planner_bin,
                                 std::chrono::milliseconds(ms), planner_search);
  } else {
    if (ms <= 0) ms = 60'000;
    r = nstp::solve(domain, problem,
                    nstp::SearchConfig{nstp::parse_search_mode(engine), max_expansions,
                                       std::chrono::milliseconds(ms)});
  }
  json j = {{"outcome", nstp::to_string(r.outcome)},
            {"expansions", r.expansions},
            {"elapsed-ms", r.elapsed_ms},
            {"plan", r.plan ? json(r.plan->steps) : json()}};
  std::cout << j.dump(2) << "\n";
  if (r.plan && !plan_out.empty()) write_file(plan_out, nstp::format_plan(*r.plan));
  return r.outcome == nstp::Outcome::kSolved ? kOk : kPlanningFailure;
}

// ---------------------------------------------------------------- validate

int run_validate(const std::string& domain_file, const std::string& problem_file,
                 const std::string& plan_file) {
  const nstp::DomainDef domain = nstp::parse_domain(read_file(domain_file));
  const nstp::ProblemDef problem = nstp::parse_problem(read_file(problem_file), domain);
  const nstp::Plan plan = nstp::parse_plan_file(read_file(plan_file));
  const nstp::ValidationReport report = nstp::validate(domain, problem, plan);
  std::cout << nstp::to_json(report).dump(2) << "\n";
  return report.valid ? kOk : kPlanningFailure;
}

// ---------------------------------------------------------------- bench

int run_bench_cmd(const std::string& suite_file, const std::string& out_file, unsigned workers,
                  bool mask_timing, const LlmFlags& llm) {
  const nstp::BenchSuite suite = nstp::load_suite(suite_file);
  nstp::BenchOptions options;
  options.workers = workers;
  options.mask_timing = mask_timing;
  options.prompts_dir = llm.prompts;
  options.llm = llm.config();
  bool wants_llm = false;
  for (const auto& run : suite.runs) {
    for (const auto& m : run.methods) wants_llm |= m == "llm" || m == "llm-symbolic";
  }
  if (wants_llm) options.llm_transport = llm.transport();

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_file.empty() && out_file != "-") {
    file.open(out_file, std::ios::binary | std::ios::trunc);
    if (!file) throw nstp::IoError("cannot write " + out_file);
    out = &file;
  }
  std::signal(SIGINT, on_sigint);
  const nstp::BenchSummary s = nstp::run_bench(suite, *out, options, &g_interrupted);
  out->flush();
  std::cerr << "nstp bench: " << s.written << "/" << s.jobs << " rows, " << s.solved
            << " solved" << (s.interrupted ? " (interrupted)" : "") << "\n";
  if (s.interrupted) {
    file.close();
    std::fflush(nullptr);
    // Jobs still in flight run on detached threads.
    std::_Exit(130);
  }
  return kOk;
}

// ---------------------------------------------------------------- model ops

int run_formulate(const std::string& domain_file, const std::string& scene, const std::string& task,
                  const std::string& problem_out, std::uint64_t seed, const LlmFlags& llm) {
  const nstp::DomainDef domain = nstp::parse_domain(read_file(domain_file));
  nstp::LlmGateway gateway(llm.config(), llm.transport());
  const nstp::ProblemDef problem = nstp::formulate_problem(
      scene, task, domain, gateway,
      nstp::load_prompt_bundle(fs::path(llm.prompts) / "formulate.prompt"), seed);
  const std::string text = nstp::serialize(problem);
  if (!problem_out.empty()) write_file(problem_out, text);
  std::cout << json{{"problem", text}}.dump(2) << "\n";
  return kOk;
}

int run_decompose(const std::string& domain_file, const std::string& problem_file,
                  const std::string& which, std::uint64_t seed, const LlmFlags& llm) {
  const nstp::DomainDef domain = nstp::parse_domain(read_file(domain_file));
  const nstp::ProblemDef problem = nstp::parse_problem(read_file(problem_file), domain);
  nstp::SubgoalSequence seq;
  if (which == "llm") {
    nstp::LlmGateway gateway(llm.config(), llm.transport());
    seq = nstp::decompose_goal(domain, problem, gateway,
                               nstp::load_prompt_bundle(fs::path(llm.prompts) / "decompose.prompt"),
                               seed);
  } else if (which == "scripted" || which == "none") {
    seq = nstp::scripted_decomposer(which == "none" ? "none" : domain.name)->decompose(domain, problem);
    seq.check(problem.goal);
  } else {
    throw nstp::ConfigError("unknown decomposer '" + which + "'");
  }
  json goals = json::array();
  for (const auto& g : seq.subgoals) goals.push_back(nstp::serialize_goal(g));
  std::cout << json{{"provenance", nstp::to_string(seq.provenance)}, {"subgoals", goals}}.dump(2)
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task planning with goal decomposition, symbolic search and MCTS over sampled plans"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate benchmark instances");
  std::string gen_domain;
  int gen_n = 3, gen_count = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool gen_force = false, gen_cross = false;
  gen->add_option("--domain", gen_domain, "barman | blocksworld | gripper")->required();
  gen->add_option("--n", gen_n, "Instance size")->required();
  gen->add_option("--count", gen_count, "Number of instances")->required();
  gen->add_option("--seed", gen_seed, "First seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--force", gen_force, "Write into a non-empty directory");
  gen->add_flag("--cross-stack", gen_cross, "blocksworld: goals mix blocks across stacks");

  // plan
  auto* plan = app.add_subcommand("plan", "Run the planning pipeline on one problem");
  PlanFlags pf;
  plan->add_option("--domain-file", pf.domain_file)->required();
  plan->add_option("--problem-file", pf.problem_file)->required();
  plan->add_option("--strategy", pf.strategy, "symbolic | mcts | auto");
  plan->add_option("--sampler", pf.sampler, "replay | oracle | llm");
  plan->add_option("--decomposer", pf.decomposer, "scripted | llm | none | file");
  plan->add_option("--subgoals", pf.subgoals_file, "Subgoal file for --decomposer file");
  plan->add_option("--replay-dir", pf.replay_dir, "Plan files for --sampler replay");
  plan->add_option("--n-s", pf.n_s, "Plans sampled per subgoal");
  plan->add_option("--seed", pf.seed);
  plan->add_option("--noise", pf.noise, "Oracle mutation probability");
  plan->add_option("--max-iterations", pf.max_iterations, "MCTS iterations per subgoal");
  plan->add_option("--retries", pf.retries, "Extra MCTS attempts per subgoal");
  plan->add_option("--engine", pf.engine, "Symbolic engine: bfs-optimal | gbfs-hadd | astar-hadd");
  plan->add_option("--symbolic-ms", pf.symbolic_ms, "Symbolic wall-clock budget per subgoal");
  plan->add_option("--trace", pf.trace_file, "Write the MCTS trace JSON here");
  plan->add_option("--plan-out", pf.plan_out, "Write the plan here");
  pf.llm.add(plan);

  // solve
  auto* solve = app.add_subcommand("solve", "Run one search engine on a problem");
  std::string s_domain, s_problem, s_engine = "bfs-optimal", s_bin, s_search = "astar(lmcut())",
                                    s_plan_out;
  std::uint64_t s_exp = 2'000'000;
  std::int64_t s_ms = 0;
  solve->add_option("--domain-file", s_domain)->required();
  solve->add_option("--problem-file", s_problem)->required();
  solve->add_option("--engine", s_engine, "bfs-optimal | gbfs-hadd | astar-hadd | external");
  solve->add_option("--max-expansions", s_exp);
  solve->add_option("--budget-ms", s_ms, "Wall-clock budget; required with --engine external");
  solve->add_option("--planner", s_bin, "External planner binary");
  solve->add_option("--planner-search", s_search, "Search string for the external planner");
  solve->add_option("--plan-out", s_plan_out);

  // validate
  auto* val = app.add_subcommand("validate", "Check a plan against a problem");
  std::string v_domain, v_problem, v_plan;
  val->add_option("--domain-file", v_domain)->required();
  val->add_option("--problem-file", v_problem)->required();
  val->add_option("--plan-file", v_plan)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite and write CSV");
  std::string b_suite, b_out;
  unsigned b_workers = 0;
  bool b_mask = false;
  LlmFlags b_llm;
  bench->add_option("--suite", b_suite)->required();
  bench->add_option("--out", b_out, "CSV file, '-' for stdout")->required();
  bench->add_option("--workers", b_workers, "Worker threads (overrides the suite)");
  bench->add_flag("--mask-timing", b_mask, "Leave planning_ms empty for byte-stable output");
  b_llm.add(bench);

  // formulate
  auto* form = app.add_subcommand("formulate", "Ask the model for a problem file");
  std::string f_domain, f_scene, f_task, f_out;
  std::uint64_t f_seed = 0;
  LlmFlags f_llm;
  form->add_option("--domain-file", f_domain)->required();
  form->add_option("--scene", f_scene, "Text description of the scene")->required();
  form->add_option("--task", f_task, "Goal task in words")->required();
  form->add_option("--problem-out", f_out);
  form->add_option("--seed", f_seed);
  f_llm.add(form);

  // decompose
  auto* dec = app.add_subcommand("decompose", "Print a subgoal sequence");
  std::string d_domain, d_problem, d_which = "scripted";
  std::uint64_t d_seed = 0;
  LlmFlags d_llm;
  dec->add_option("--domain-file", d_domain)->required();
  dec->add_option("--problem-file", d_problem)->required();
  dec->add_option("--decomposer", d_which, "scripted | llm | none");
  dec->add_option("--seed", d_seed);
  d_llm.add(dec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return run_gen(gen_domain, gen_n, gen_count, gen_seed, gen_out, gen_force, gen_cross);
    if (*plan) return run_plan(pf);
    if (*solve) return run_solve(s_domain, s_problem, s_engine, s_exp, s_ms, s_bin, s_search, s_plan_out);
    if (*val) return run_validate(v_domain, v_problem, v_plan);
    if (*bench) return run_bench_cmd(b_suite, b_out, b_workers, b_mask, b_llm);
    if (*form) return run_formulate(f_domain, f_scene, f_task, f_out, f_seed, f_llm);
    if (*dec) return run_decompose(d_domain, d_problem, d_which, d_seed, d_llm);
  } catch (const nstp::Error& e) {
    std::cerr << "nstp: " << e.kind() << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "nstp: " << e.what() << "\n";
    return kEnvironment;
  }
  return kUsage;
}
