#pragma once

// Benchmark harness: expands a suite description into jobs, runs them in a
// worker pool and writes one CSV row per job.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nstp/domains.hpp"
#include "nstp/llm.hpp"

namespace nstp {

/// Per-run budgets. Expansion and iteration counts keep runs reproducible;
/// the wall clocks are safety nets.
struct BenchBudgets {
  std::uint64_t symbolic_expansions = 2'000'000;
  std::chrono::milliseconds symbolic_wall_clock{60'000};
  std::uint64_t oracle_expansions = 2'000'000;
  std::chrono::milliseconds oracle_wall_clock{600'000};
  std::uint64_t max_iterations = 1000;
  unsigned retry_budget = 2;
  std::chrono::milliseconds auto_probe{1000};
};

struct BenchRun {
  DomainKind domain = DomainKind::kBlocksworld;
  std::vector<int> n_values;
  int instances = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  std::vector<std::size_t> n_s_values{5};
  /// Probability used for each of the oracle's three mutations.
  double noise = 0.2;
  BenchBudgets budgets;
};

struct BenchSuite {
  std::vector<BenchRun> runs;
  unsigned workers = 1;
};

/// Known method names:
///   symbolic-llm   symbolic planner, scripted decomposer
///   symbolic       symbolic planner, no decomposition
///   mcts           MCTS, scripted decomposer, perturbed oracle
///   mcts-none      MCTS, no decomposition, perturbed oracle
///   auto           dispatch per subgoal, scripted decomposer, oracle
///   llm-symbolic   symbolic planner, model decomposer
///   llm            MCTS, model decomposer, model plan sampler
/// The last two need a transport in BenchOptions.
const std::vector<std::string>& bench_methods();
bool method_samples(const std::string& method);

/// Reads the suite JSON (schema in README.md). Throws ConfigError.
BenchSuite parse_suite(const nlohmann::json& j);
BenchSuite load_suite(const std::filesystem::path& path);

struct BenchJob {
  std::size_t run = 0;
  DomainKind domain = DomainKind::kBlocksworld;
  int n = 0;
  std::uint64_t seed = 0;
  std::string method;
  /// 0 for methods that do not sample.
  std::size_t n_s = 0;
};

/// Job order: run, n, instance seed, method, n_s.
std::vector<BenchJob> expand_suite(const BenchSuite& suite);

struct BenchRow {
  std::string domain;
  int n = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::size_t n_s = 0;
  bool success = false;
  std::int64_t planning_ms = 0;
  std::size_t plan_length = 0;
  std::size_t subgoals = 0;
  std::string notes;
};

inline constexpr const char* kCsvSchemaLine = "# schema=1";
inline constexpr const char* kCsvHeader =
    "domain,n,seed,method,n_s,success,planning_ms,plan_length,subgoals,notes";

/// One CSV line without the newline. With `mask_timing` the planning_ms
/// field is left empty so that reruns compare byte for byte.
std::string csv_line(const BenchRow& row, bool mask_timing);

struct BenchOptions {
  /// Overrides the suite's worker count when nonzero.
  unsigned workers = 0;
  bool mask_timing = false;
  /// Needed by the llm methods.
  std::shared_ptr<Transport> llm_transport;
  LlmConfig llm;
  std::filesystem::path prompts_dir = "prompts";
};

/// Generates the instance and runs one job. Failures become rows.
BenchRow run_job(const BenchSuite& suite, const BenchJob& job, const BenchOptions& options);

struct BenchSummary {
  std::size_t jobs = 0;
  std::size_t written = 0;
  std::size_t solved = 0;
  bool interrupted = false;
};

/// Writes the schema line, the header and one row per job in job order,
/// flushing after every row. When `stop` becomes true, the rows finished
/// so far are written and the call returns without waiting for jobs in
/// flight (their threads are detached).
BenchSummary run_bench(const BenchSuite& suite, std::ostream& out, const BenchOptions& options,
                       const std::atomic<bool>* stop = nullptr);

}  // namespace nstp
