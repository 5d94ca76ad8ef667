#include <sstream>

#include "nstp/pddl.hpp"

namespace nstp {

namespace {

std::string pad(int n) { return std::string(static_cast<std::size_t>(n), ' '); }

// Groups consecutive names sharing a type: "?a ?b - block ?p - position".
std::string typed_list(const std::vector<TypedName>& names, bool show_root) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += names[i].name;
    const bool last_of_group = i + 1 == names.size() || names[i + 1].type != names[i].type;
    if (last_of_group && (show_root || names[i].type != kRootType)) {
      out += " - " + names[i].type;
    }
  }
  return out;
}

void write_conjunction(std::ostringstream& os, const std::vector<std::string>& parts,
                       int indent) {
  if (parts.empty()) {
    os << "()";
  } else if (parts.size() == 1) {
    os << parts.front();
  } else {
    os << "(and";
    for (const auto& p : parts) os << '\n' << pad(indent + 2) << p;
    os << ')';
  }
}

}  // namespace

std::string serialize(const DomainDef& domain) {
  std::ostringstream os;
  os << "(define (domain " << domain.name << ")\n";
  if (!domain.requirements.empty()) {
    os << "  (:requirements";
    for (const auto& r : domain.requirements) os << " :" << r;
    os << ")\n";
  }
  if (!domain.types.empty()) {
    std::vector<TypedName> types;
    for (const auto& t : domain.types) types.push_back({t.name, t.parent});
    os << "  (:types " << typed_list(types, true) << ")\n";
  }
  os << "  (:predicates";
  for (const auto& p : domain.predicates) {
    os << "\n    (" << p.name;
    if (!p.params.empty()) os << ' ' << typed_list(p.params, false);
    os << ')';
  }
  os << ")\n";
  for (const auto& a : domain.actions) {
    os << "  (:action " << a.name << '\n';
    os << "    :parameters (" << typed_list(a.params, false) << ")\n";
    std::vector<std::string> pre;
    for (const auto& l : a.preconditions) pre.push_back(l.to_string());
    os << "    :precondition ";
    write_conjunction(os, pre, 4);
    os << '\n';
    std::vector<std::string> eff;
    for (const auto& at : a.add_effects) eff.push_back(at.to_string());
    for (const auto& at : a.del_effects) eff.push_back("(not " + at.to_string() + ")");
    os << "    :effect ";
    write_conjunction(os, eff, 4);
    os << ")\n";
  }
  os << ")\n";
  return os.str();
}

std::string serialize_goal(const GoalCond& goal, int indent) {
  std::ostringstream os;
  os << "(and";
  for (const auto& l : goal.literals()) os << '\n' << pad(indent + 2) << l.to_string();
  os << ')';
  return os.str();
}

std::string serialize(const ProblemDef& problem) {
  std::ostringstream os;
  os << "(define (problem " << problem.name << ")\n";
  os << "  (:domain " << problem.domain_name << ")\n";
  os << "  (:objects";
  // One line per type group keeps large object lists readable.
  std::size_t i = 0;
  while (i < problem.objects.size()) {
    std::size_t j = i;
    while (j < problem.objects.size() && problem.objects[j].type == problem.objects[i].type) ++j;
    os << "\n    ";
    for (std::size_t k = i; k < j; ++k) os << problem.objects[k].name << ' ';
    os << "- " << problem.objects[i].type;
    i = j;
  }
  os << ")\n";
  os << "  (:init";
  for (const auto& a : problem.init) os << "\n    " << a.to_string();
  os << ")\n";
  os << "  (:goal " << serialize_goal(problem.goal, 4) << "))\n";
  return os.str();
}

}  // namespace nstp
