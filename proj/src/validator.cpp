#include "nstp/validator.hpp"

#include <regex>
#include <sstream>

#include "nstp/error.hpp"

namespace nstp {

std::string to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kUnresolvedAction:
      return "unresolved-action";
    case FailureKind::kPreconditionViolated:
      return "precondition-violated";
    case FailureKind::kGoalUnsatisfied:
      return "goal-unsatisfied";
  }
  return "unknown";
}

ValidationReport validate(const DomainDef& domain, const ProblemDef& problem, const Plan& plan) {
  ValidationReport report;
  State state = problem.init;
  report.trace.push_back(state_key(state));
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    auto action = resolve_ground_action(domain, problem, plan.steps[i]);
    if (!action) {
      report.failure_step = i;
      report.failure_kind = FailureKind::kUnresolvedAction;
      report.final_state = std::move(state);
      return report;
    }
    if (!applicable(state, *action)) {
      report.failure_step = i;
      report.failure_kind = FailureKind::kPreconditionViolated;
      report.final_state = std::move(state);
      return report;
    }
    state = apply(state, *action);
    report.trace.push_back(state_key(state));
  }
  if (!satisfies(state, problem.goal)) {
    report.failure_step = plan.steps.size();
    report.failure_kind = FailureKind::kGoalUnsatisfied;
  } else {
    report.valid = true;
  }
  report.final_state = std::move(state);
  return report;
}

Plan parse_plan_file(std::string_view text) {
  static const std::regex numbering(R"(^\s*(step\s*)?[0-9]*(\.[0-9]+)?\s*:\s*)",
                                    std::regex::icase);
  Plan plan;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find(';'); c != std::string::npos) line.erase(c);
    line = std::regex_replace(line, numbering, "", std::regex_constants::format_first_only);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto tokens = split_display_form(line);
    if (!tokens) {
      const std::size_t col = line.find_first_not_of(" \t") + 1;
      throw SyntaxError(line_no, col, "expected a single '(action arg ...)' per line");
    }
    std::string step = "(";
    for (std::size_t i = 0; i < tokens->size(); ++i) {
      if (i) step += ' ';
      step += (*tokens)[i];
    }
    step += ')';
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

std::string format_plan(const Plan& plan) {
  std::string out;
  for (const auto& s : plan.steps) out += s + "\n";
  return out;
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json j;
  j["valid"] = report.valid;
  j["failure-step"] = report.failure_step ? nlohmann::json(*report.failure_step) : nlohmann::json();
  j["failure-kind"] =
      report.failure_kind ? nlohmann::json(to_string(*report.failure_kind)) : nlohmann::json();
  auto trace = nlohmann::json::array();
  for (const auto& k : report.trace) trace.push_back(k.str());
  j["trace"] = std::move(trace);
  return j;
}

}  // namespace nstp
