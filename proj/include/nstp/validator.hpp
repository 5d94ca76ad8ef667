#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nstp/pddl.hpp"
#include "nstp/strips.hpp"

namespace nstp {

/// Ordered action display forms, normalized to "(name a b)".
struct Plan {
  std::vector<std::string> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
  bool operator==(const Plan&) const = default;
};

enum class FailureKind { kUnresolvedAction, kPreconditionViolated, kGoalUnsatisfied };

std::string to_string(FailureKind kind);

/// Outcome of replaying a plan. On a step failure `failure_step` is the
/// 0-based index of the offending step and `trace` holds the states
/// visited before it (failure_step + 1 keys). On a goal failure
/// `failure_step` equals the plan length and the trace is complete.
struct ValidationReport {
  bool valid = false;
  std::optional<std::size_t> failure_step;
  std::optional<FailureKind> failure_kind;
  std::vector<StateKey> trace;
  /// State reached after the last applied step.
  State final_state;
};

/// Replays `plan` from `problem.init` and checks the goal at the end.
/// Unresolvable steps are reported, not thrown.
ValidationReport validate(const DomainDef& domain, const ProblemDef& problem, const Plan& plan);

/// VAL-style plan text: one "(name arg ...)" per line, ';' comments, blank
/// lines and an optional leading "step:" / "N:" numbering ignored.
/// Throws SyntaxError carrying the line number.
Plan parse_plan_file(std::string_view text);

/// One action per line, as parse_plan_file reads it back.
std::string format_plan(const Plan& plan);

/// JSON object with the keys "valid", "failure-step", "failure-kind" and
/// "trace" (absent values are null).
nlohmann::json to_json(const ValidationReport& report);

}  // namespace nstp
