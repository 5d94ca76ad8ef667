#pragma once

// Abstract syntax for the supported PDDL fragment (:strips, :typing and
// negative preconditions), plus the parser and the normalizing writer.

#include <compare>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nstp {

inline constexpr std::string_view kRootType = "object";

/// A predicate applied to arguments. Arguments starting with '?' are
/// variables (only inside action schemas); everything else is an object.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;

  bool is_ground() const;
  /// "(pred a b)"; "(pred)" for nullary predicates.
  std::string to_string() const;
};

struct Literal {
  Atom atom;
  bool positive = true;

  auto operator<=>(const Literal&) const = default;
  bool operator==(const Literal&) const = default;

  /// "(pred a)" or "(not (pred a))".
  std::string to_string() const;
};

struct TypedName {
  std::string name;
  std::string type{kRootType};

  auto operator<=>(const TypedName&) const = default;
  bool operator==(const TypedName&) const = default;
};

struct PredicateDecl {
  std::string name;
  std::vector<TypedName> params;

  bool operator==(const PredicateDecl&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Literal> preconditions;
  std::vector<Atom> add_effects;
  std::vector<Atom> del_effects;

  bool operator==(const ActionSchema&) const = default;
};

struct TypeDecl {
  std::string name;
  std::string parent{kRootType};

  bool operator==(const TypeDecl&) const = default;
};

struct DomainDef {
  std::string name;
  std::vector<std::string> requirements;  // without the leading ':'
  std::vector<TypeDecl> types;
  std::vector<PredicateDecl> predicates;
  std::vector<ActionSchema> actions;

  bool operator==(const DomainDef&) const = default;

  const PredicateDecl* find_predicate(std::string_view name) const;
  const ActionSchema* find_action(std::string_view name) const;
  /// Parent of `type`, or empty for the root and for unknown types.
  std::string parent_of(std::string_view type) const;
  bool is_declared_type(std::string_view type) const;
  /// Reflexive-transitive subtype test over the single-inheritance tree.
  bool is_subtype(std::string_view type, std::string_view ancestor) const;
};

/// Flat conjunction of ground literals, kept sorted and duplicate-free.
class GoalCond {
 public:
  GoalCond() = default;
  explicit GoalCond(std::vector<Literal> literals);

  const std::vector<Literal>& literals() const { return literals_; }
  bool empty() const { return literals_.empty(); }
  std::size_t size() const { return literals_.size(); }

  /// True when every literal of `other` also appears here (syntactic
  /// entailment of conjunctions).
  bool entails(const GoalCond& other) const;

  bool operator==(const GoalCond&) const = default;

 private:
  std::vector<Literal> literals_;
};

/// Canonical set of ground positive atoms. The ordering is lexicographic
/// on predicate then arguments, so equal states have equal serializations.
class State {
 public:
  State() = default;
  explicit State(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  bool contains(const Atom& atom) const;

  auto begin() const { return atoms_.begin(); }
  auto end() const { return atoms_.end(); }

  bool operator==(const State&) const = default;

 private:
  std::vector<Atom> atoms_;
};

struct ProblemDef {
  std::string name;
  std::string domain_name;
  std::vector<TypedName> objects;
  State init;
  GoalCond goal;

  bool operator==(const ProblemDef&) const = default;

  /// Type of `object`, or empty if it is not declared.
  std::string type_of(std::string_view object) const;
};

DomainDef parse_domain(std::string_view text);
ProblemDef parse_problem(std::string_view text, const DomainDef& domain);

/// Parses a bare goal condition, either "(and l1 l2 ...)" or a single
/// literal, and type-checks it against the problem's objects.
GoalCond parse_goal_condition(std::string_view text, const DomainDef& domain,
                              const ProblemDef& problem);

/// Every top-level "(:goal <condition>)" block in `text`, in order. Text
/// outside those blocks is ignored, so this also reads free-form model
/// output. Throws SyntaxError / SemanticError for a malformed block.
std::vector<GoalCond> parse_goal_blocks(std::string_view text, const DomainDef& domain,
                                        const ProblemDef& problem);

/// Normalized PDDL: lower case, 2-space indentation, one atom per line in
/// :init, deterministic ordering.
std::string serialize(const DomainDef& domain);
std::string serialize(const ProblemDef& problem);
/// "(and\n  l1\n  l2)" style block used inside (:goal ...).
std::string serialize_goal(const GoalCond& goal, int indent = 0);

/// Lower-cases an identifier (PDDL identifiers are case-insensitive).
std::string normalize_identifier(std::string_view id);

}  // namespace nstp
