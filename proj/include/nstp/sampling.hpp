#pragma once

// Plan samplers: the interface the MCTS planner draws candidate plans
// from, plus two offline implementations (directory replay and a
// perturbed symbolic oracle).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "nstp/pddl.hpp"
#include "nstp/search.hpp"
#include "nstp/strips.hpp"
#include "nstp/validator.hpp"

namespace nstp {

/// One link of a chained task: shared domain and grounding, start state
/// in `problem.init` and target condition in `problem.goal`.
struct SubProblem {
  std::shared_ptr<const Grounding> grounding;
  ProblemDef problem;
  std::size_t index = 0;

  const DomainDef& domain() const { return grounding->domain(); }
};

/// Grounds `problem` once and wraps it as sub-problem 0.
SubProblem make_subproblem(std::shared_ptr<const DomainDef> domain, ProblemDef problem);

struct WeightedStep {
  std::string action;  // display form
  double weight = 0.0;

  bool operator==(const WeightedStep&) const = default;
};

struct WeightedPlan {
  std::vector<WeightedStep> steps;
  std::size_t sample_id = 0;
  /// Set when the source returned no token log-probabilities and the
  /// weights fell back to 0.
  bool missing_logprobs = false;

  Plan plan() const;
  bool operator==(const WeightedPlan&) const = default;
};

struct SampleRequest {
  const SubProblem* sub = nullptr;
  std::size_t n_s = 1;
  std::uint64_t seed = 0;
};

class PlanSampler {
 public:
  virtual ~PlanSampler() = default;

  /// Exactly `req.n_s` plans, deterministic in (sampler, req). Plans may
  /// be invalid. Throws SamplerUnavailable (or a subclass) and ConfigError
  /// for a malformed request.
  virtual std::vector<WeightedPlan> sample(const SampleRequest& req) = 0;
  virtual std::string name() const = 0;
};

/// Serves plan files from `dir` in lexicographic filename order. When a
/// subdirectory named after the sub-problem index exists it is used
/// instead, so one directory can feed a whole subgoal chain. Sidecar
/// "<stem>.weights" files hold one weight per step; missing sidecars mean
/// weight 0. Throws InsufficientPlans and FormatError from sample().
std::unique_ptr<PlanSampler> replay_sampler(std::filesystem::path dir);

struct NoiseModel {
  double drop_step = 0.0;
  double swap_adjacent = 0.0;
  double substitute_action = 0.0;

  /// Throws ConfigError unless every probability lies in [0, 1].
  void check() const;
};

struct OracleOptions {
  /// weight = -epsilon * (1 + mutated)
  double epsilon = 0.1;
  /// Search used to produce the reference plan. Expansion-bounded with a
  /// generous wall clock so results do not depend on machine speed.
  SearchConfig search{SearchMode::kBfsOptimal, 2'000'000, std::chrono::milliseconds{600'000}};
};

/// Solves the sub-problem symbolically and emits n_s mutated copies of the
/// solution. Sample k draws from Rng(derive_seed(req.seed, k)) and applies,
/// in this order, each with its own probability and at most once:
///   drop-step       removes a uniformly chosen step; the step that moves
///                   into its place counts as mutated
///   swap-adjacent   exchanges steps i and i+1; both count as mutated
///   substitute      replaces a uniformly chosen step with a different,
///                   uniformly chosen ground action
/// Reference plans are cached per (start state, goal). Throws
/// OracleUnsolvable when the search does not return a plan.
std::unique_ptr<PlanSampler> perturbed_oracle_sampler(NoiseModel noise, OracleOptions options = {});

}  // namespace nstp
