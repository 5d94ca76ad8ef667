#pragma once

// Goal decomposition, sub-problem chaining, planner dispatch and policy
// aggregation.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nstp/error.hpp"
#include "nstp/mcts.hpp"
#include "nstp/pddl.hpp"
#include "nstp/sampling.hpp"
#include "nstp/search.hpp"

namespace nstp {

enum class Provenance { kLlm, kScripted, kManual };

std::string to_string(Provenance p);

/// Ordered subgoals S1..Sn; the start state is implicit.
struct SubgoalSequence {
  std::vector<GoalCond> subgoals;
  Provenance provenance = Provenance::kScripted;

  /// Throws DecompositionFailed when empty or when the last subgoal does
  /// not contain every literal of `goal`.
  void check(const GoalCond& goal) const;
};

/// One "(:goal ...)" block per subgoal.
std::string serialize_subgoals(const SubgoalSequence& seq);
/// Reads serialize_subgoals output (provenance manual).
SubgoalSequence parse_subgoals(std::string_view text, const DomainDef& domain,
                               const ProblemDef& problem);

class Decomposer {
 public:
  virtual ~Decomposer() = default;
  virtual SubgoalSequence decompose(const DomainDef& domain, const ProblemDef& problem) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic decomposers, keyed by domain kind:
///   blocksworld-new  for each stack whose goal does not hold yet: clear
///                    its blocks and its table position, then rebuild it
///   barman-new       one cocktail at a time
///   gripper-new      one room's balls at a time
///   none             the goal itself
/// Subgoals are cumulative and the last one always equals the goal.
/// Throws UnknownDomainKind.
std::unique_ptr<Decomposer> scripted_decomposer(std::string_view domain_kind);

/// Serves a fixed subgoal file (see parse_subgoals).
std::unique_ptr<Decomposer> file_decomposer(std::string text);

/// Hands out P0, P1, ... where P(i+1) starts from the state the caller
/// reached while solving Pi.
class SubproblemChain {
 public:
  SubproblemChain(std::shared_ptr<const Grounding> grounding, const ProblemDef& problem,
                  SubgoalSequence seq);

  std::size_t size() const { return seq_.subgoals.size(); }
  bool done() const { return next_ >= size(); }
  /// The pending sub-problem. Requires !done().
  SubProblem current() const;
  /// Records the end state of the pending sub-problem and moves on.
  void advance(State reached);

 private:
  std::shared_ptr<const Grounding> grounding_;
  ProblemDef base_;
  SubgoalSequence seq_;
  State state_;
  std::size_t next_ = 0;
};

SubproblemChain chain_subproblems(std::shared_ptr<const Grounding> grounding,
                                  const ProblemDef& problem, SubgoalSequence seq);

enum class Strategy { kSymbolic, kMcts, kAuto };
enum class Method { kSymbolic, kMcts };

std::string to_string(Strategy s);
std::string to_string(Method m);
/// "symbolic", "mcts", "auto". Throws ConfigError.
Strategy parse_strategy(std::string_view text);

struct PipelineConfig {
  Strategy strategy = Strategy::kAuto;
  std::chrono::milliseconds auto_probe_budget{1000};
  std::size_t n_s = 5;
  MctsParams mcts;
  /// Engine for symbolic sub-problems.
  SearchConfig symbolic{SearchMode::kGbfsHadd, 2'000'000, std::chrono::milliseconds{60'000}};
  /// Extra attempts per MCTS subgoal, each with a fresh sampler seed.
  unsigned retry_budget = 2;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void check() const;
};

struct DispatchDecision {
  Method method = Method::kSymbolic;
  /// The auto probe's result; reused as the sub-plan when it solved.
  std::optional<SearchResult> probe;
};

DispatchDecision dispatch_planner(const SubProblem& sub, const PipelineConfig& config);

struct SubgoalReport {
  std::size_t index = 0;
  Method method = Method::kSymbolic;
  Outcome outcome = Outcome::kBudgetExhausted;
  std::int64_t elapsed_ms = 0;
  std::size_t plan_length = 0;
  unsigned attempts = 0;
  std::string note;
};

struct PipelineReport {
  std::optional<Plan> plan;
  std::vector<SubgoalReport> per_subgoal;
  std::size_t subgoal_count = 0;
  std::int64_t decomposition_ms = 0;
  std::int64_t total_elapsed_ms = 0;
  bool success = false;
  /// Per-subgoal MCTS traces, filled when tracing is requested.
  nlohmann::json trace;
};

nlohmann::json to_json(const PipelineReport& report);

/// Pipeline failures carry the report accumulated so far.
class PipelineError : public Error {
 public:
  PipelineError(std::string kind, const std::string& message, PipelineReport report)
      : Error(std::move(kind), message), report_(std::move(report)) {}
  const PipelineReport& report() const noexcept { return report_; }

 private:
  PipelineReport report_;
};

class DecompositionFailed : public PipelineError {
 public:
  DecompositionFailed(const std::string& message, PipelineReport report = {})
      : PipelineError("DecompositionFailed", message, std::move(report)) {}
};

class SubgoalUnsolved : public PipelineError {
 public:
  SubgoalUnsolved(std::size_t index, Outcome last, const std::string& message,
                  PipelineReport report)
      : PipelineError("SubgoalUnsolved", message, std::move(report)), index_(index), last_(last) {}
  std::size_t index() const noexcept { return index_; }
  Outcome last_outcome() const noexcept { return last_; }

 private:
  std::size_t index_;
  Outcome last_;
};

class AggregateValidationFailed : public PipelineError {
 public:
  AggregateValidationFailed(const std::string& message, PipelineReport report)
      : PipelineError("AggregateValidationFailed", message, std::move(report)) {}
};

/// Decomposes, solves every sub-problem in turn and validates the
/// concatenated plan against the original problem. `sampler` may be null
/// only with the symbolic strategy. Sampler transport errors propagate.
PipelineReport plan_task(const DomainDef& domain, const ProblemDef& problem,
                         const PipelineConfig& config, Decomposer& decomposer,
                         PlanSampler* sampler, bool trace = false);

}  // namespace nstp
