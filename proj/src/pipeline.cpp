#include "nstp/pipeline.hpp"

#include "nstp/random.hpp"
#include "nstp/validator.hpp"

namespace nstp {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t since_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

}  // namespace

SubproblemChain::SubproblemChain(std::shared_ptr<const Grounding> grounding,
                                 const ProblemDef& problem, SubgoalSequence seq)
    : grounding_(std::move(grounding)), base_(problem), seq_(std::move(seq)), state_(problem.init) {}

SubProblem SubproblemChain::current() const {
  SubProblem sub;
  sub.grounding = grounding_;
  sub.problem = base_;
  sub.problem.name = base_.name + "-sub" + std::to_string(next_);
  sub.problem.init = state_;
  sub.problem.goal = seq_.subgoals.at(next_);
  sub.index = next_;
  return sub;
}

void SubproblemChain::advance(State reached) {
  state_ = std::move(reached);
  ++next_;
}

SubproblemChain chain_subproblems(std::shared_ptr<const Grounding> grounding,
                                  const ProblemDef& problem, SubgoalSequence seq) {
  return SubproblemChain(std::move(grounding), problem, std::move(seq));
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kSymbolic:
      return "symbolic";
    case Strategy::kMcts:
      return "mcts";
    case Strategy::kAuto:
      return "auto";
  }
  return "unknown";
}

std::string to_string(Method m) { return m == Method::kSymbolic ? "symbolic" : "mcts"; }

Strategy parse_strategy(std::string_view text) {
  if (text == "symbolic") return Strategy::kSymbolic;
  if (text == "mcts") return Strategy::kMcts;
  if (text == "auto") return Strategy::kAuto;
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

void PipelineConfig::check() const {
  if (n_s < 1) throw ConfigError("n_s must be >= 1");
  if (auto_probe_budget.count() <= 0) throw ConfigError("auto-probe budget must be > 0");
  mcts.check();
  symbolic.check();
}

DispatchDecision dispatch_planner(const SubProblem& sub, const PipelineConfig& config) {
  DispatchDecision d;
  switch (config.strategy) {
    case Strategy::kSymbolic:
      d.method = Method::kSymbolic;
      return d;
    case Strategy::kMcts:
      d.method = Method::kMcts;
      return d;
    case Strategy::kAuto:
      break;
  }
  SearchConfig probe = config.symbolic;
  probe.mode = SearchMode::kGbfsHadd;
  probe.wall_clock_budget = config.auto_probe_budget;
  d.probe = solve(*sub.grounding, sub.problem.init, sub.problem.goal, probe);
  d.method = d.probe->outcome == Outcome::kSolved ? Method::kSymbolic : Method::kMcts;
  return d;
}

nlohmann::json to_json(const PipelineReport& report) {
  nlohmann::json j;
  j["success"] = report.success;
  j["plan"] = report.plan ? nlohmann::json(report.plan->steps) : nlohmann::json();
  j["subgoals"] = report.subgoal_count;
  j["decomposition-ms"] = report.decomposition_ms;
  j["total-elapsed-ms"] = report.total_elapsed_ms;
  auto rows = nlohmann::json::array();
  for (const auto& s : report.per_subgoal) {
    rows.push_back({{"index", s.index},
                    {"method", to_string(s.method)},
                    {"outcome", to_string(s.outcome)},
                    {"elapsed-ms", s.elapsed_ms},
                    {"plan-length", s.plan_length},
                    {"attempts", s.attempts},
                    {"note", s.note}});
  }
  j["per-subgoal"] = std::move(rows);
  if (!report.trace.is_null()) j["trace"] = report.trace;
  return j;
}

PipelineReport plan_task(const DomainDef& domain, const ProblemDef& problem,
                         const PipelineConfig& config, Decomposer& decomposer,
                         PlanSampler* sampler, bool trace) {
  config.check();
  if (config.strategy != Strategy::kSymbolic && sampler == nullptr) {
    throw ConfigError("strategy " + to_string(config.strategy) + " needs a plan sampler");
  }
  const auto start = Clock::now();
  PipelineReport report;
  if (trace) report.trace = nlohmann::json::array();
  auto finish = [&] { report.total_elapsed_ms = since_ms(start); };

  SubgoalSequence seq;
  try {
    seq = decomposer.decompose(domain, problem);
    seq.check(problem.goal);
  } catch (const DecompositionFailed& e) {
    finish();
    throw DecompositionFailed(e.what(), report);
  } catch (const TransportError&) {
    throw;
  } catch (const BudgetExceeded&) {
    throw;
  } catch (const Error& e) {
    finish();
    throw DecompositionFailed(e.kind() + ": " + e.what(), report);
  }
  report.decomposition_ms = since_ms(start);
  report.subgoal_count = seq.subgoals.size();

  auto grounding = std::make_shared<const Grounding>(std::make_shared<const DomainDef>(domain), problem);
  SubproblemChain chain = chain_subproblems(grounding, problem, std::move(seq));
  Plan aggregate;

  while (!chain.done()) {
    const SubProblem sub = chain.current();
    const auto sub_start = Clock::now();
    SubgoalReport row;
    row.index = sub.index;

    const DispatchDecision decision = dispatch_planner(sub, config);
    row.method = decision.method;
    std::optional<Plan> sub_plan;
    std::optional<ValidationReport> check;

    auto accept = [&](const SearchResult& r) {
      row.outcome = r.outcome;
      if (!r.plan) return false;
      ValidationReport v = validate(domain, sub.problem, *r.plan);
      if (!v.valid) {
        row.note = "sub-plan rejected at step " + std::to_string(v.failure_step.value_or(0));
        return false;
      }
      sub_plan = r.plan;
      check = std::move(v);
      return true;
    };

    if (decision.method == Method::kSymbolic) {
      row.attempts = 1;
      if (decision.probe && decision.probe->outcome == Outcome::kSolved) {
        accept(*decision.probe);
      } else {
        accept(solve(*sub.grounding, sub.problem.init, sub.problem.goal, config.symbolic));
      }
    } else {
      for (unsigned attempt = 0; attempt <= config.retry_budget && !sub_plan; ++attempt) {
        row.attempts = attempt + 1;
        const std::uint64_t attempt_seed =
            derive_seed(derive_seed(config.seed, sub.index), attempt);
        std::vector<WeightedPlan> samples;
        try {
          samples = sampler->sample(SampleRequest{&sub, config.n_s, attempt_seed});
        } catch (const OracleUnsolvable& e) {
          row.outcome = Outcome::kBudgetExhausted;
          row.note = std::string("oracle: ") + e.what();
          break;
        }
        StateTree tree = build_state_tree(sub, samples);
        MctsParams params = config.mcts;
        params.rng_seed = derive_seed(attempt_seed, 0x6d637473);
        nlohmann::json iterations;
        const SearchResult r = mcts_search(tree, params, trace ? &iterations : nullptr);
        if (trace) {
          report.trace.push_back({{"subgoal", sub.index},
                                  {"attempt", attempt},
                                  {"tree-size", tree.size()},
                                  {"iterations", std::move(iterations)}});
        }
        accept(r);
      }
    }

    row.elapsed_ms = since_ms(sub_start);
    if (!sub_plan) {
      report.per_subgoal.push_back(row);
      finish();
      throw SubgoalUnsolved(sub.index, row.outcome,
                            "subgoal " + std::to_string(sub.index) + " unsolved (" +
                                to_string(row.outcome) + ")" +
                                (row.note.empty() ? "" : ": " + row.note),
                            report);
    }
    row.plan_length = sub_plan->size();
    report.per_subgoal.push_back(row);
    aggregate.steps.insert(aggregate.steps.end(), sub_plan->steps.begin(), sub_plan->steps.end());
    chain.advance(check->final_state);
  }

  const ValidationReport final_check = validate(domain, problem, aggregate);
  report.plan = aggregate;
  finish();
  if (!final_check.valid) {
    throw AggregateValidationFailed("aggregate plan fails validation at step " +
                                        std::to_string(final_check.failure_step.value_or(0)),
                                    report);
  }
  report.success = true;
  return report;
}

}  // namespace nstp
