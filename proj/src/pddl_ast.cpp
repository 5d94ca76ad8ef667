#include <algorithm>
#include <cctype>

#include "nstp/pddl.hpp"

namespace nstp {

std::string normalize_identifier(std::string_view id) {
  std::string out(id);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool Atom::is_ground() const {
  return std::none_of(args.begin(), args.end(),
                      [](const std::string& a) { return !a.empty() && a.front() == '?'; });
}

std::string Atom::to_string() const {
  std::string out = "(" + predicate;
  for (const auto& a : args) {
    out += ' ';
    out += a;
  }
  out += ')';
  return out;
}

std::string Literal::to_string() const {
  return positive ? atom.to_string() : "(not " + atom.to_string() + ")";
}

const PredicateDecl* DomainDef::find_predicate(std::string_view name) const {
  for (const auto& p : predicates) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const ActionSchema* DomainDef::find_action(std::string_view name) const {
  for (const auto& a : actions) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::string DomainDef::parent_of(std::string_view type) const {
  for (const auto& t : types) {
    if (t.name == type) return t.parent;
  }
  return {};
}

bool DomainDef::is_declared_type(std::string_view type) const {
  if (type == kRootType) return true;
  return std::any_of(types.begin(), types.end(),
                     [&](const TypeDecl& t) { return t.name == type; });
}

bool DomainDef::is_subtype(std::string_view type, std::string_view ancestor) const {
  if (ancestor == kRootType) return true;
  std::string current(type);
  // The tree is validated acyclic at parse time; the bound guards against
  // hand-built malformed definitions.
  for (std::size_t hops = 0; hops <= types.size() && !current.empty(); ++hops) {
    if (current == ancestor) return true;
    current = parent_of(current);
  }
  return false;
}

GoalCond::GoalCond(std::vector<Literal> literals) : literals_(std::move(literals)) {
  std::sort(literals_.begin(), literals_.end());
  literals_.erase(std::unique(literals_.begin(), literals_.end()), literals_.end());
}

bool GoalCond::entails(const GoalCond& other) const {
  return std::includes(literals_.begin(), literals_.end(), other.literals_.begin(),
                       other.literals_.end());
}

State::State(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end());
  atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
}

bool State::contains(const Atom& atom) const {
  return std::binary_search(atoms_.begin(), atoms_.end(), atom);
}

std::string ProblemDef::type_of(std::string_view object) const {
  for (const auto& o : objects) {
    if (o.name == object) return o.type;
  }
  return {};
}

}  // namespace nstp
