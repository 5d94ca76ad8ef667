#pragma once

// Grounding and the deterministic STRIPS transition semantics.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nstp/pddl.hpp"

namespace nstp {

struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  std::vector<Literal> pre;  // sorted, unique
  std::vector<Atom> add;     // sorted, unique
  std::vector<Atom> del;     // sorted, unique, disjoint from add

  /// "(name arg1 arg2 ...)"
  std::string display_form() const;

  bool operator==(const GroundAction&) const = default;
};

/// Opaque identity of a State: its canonical serialization, so equal keys
/// imply equal states and vice versa.
class StateKey {
 public:
  StateKey() = default;
  explicit StateKey(std::string text) : text_(std::move(text)) {}

  const std::string& str() const { return text_; }

  bool operator==(const StateKey&) const = default;
  auto operator<=>(const StateKey&) const = default;

 private:
  std::string text_;
};

/// Key of the empty state.
inline const StateKey kEmptyStateKey{};

bool applicable(const State& s, const GroundAction& a);
/// Throws NotApplicable when the precondition does not hold.
State apply(const State& s, const GroundAction& a);
bool satisfies(const State& s, const GoalCond& g);
StateKey state_key(const State& s);

/// Builds the ground action for `schema` under `binding` (one object per
/// parameter). Effects use add-after-delete semantics, so an atom that is
/// both added and deleted ends up only in `add`.
GroundAction instantiate(const ActionSchema& schema,
                         const std::vector<std::string>& binding);

/// Every type-consistent instantiation of every schema, in schema order and
/// then lexicographic order of argument tuples (objects sorted by name).
std::vector<GroundAction> ground_actions(const DomainDef& domain,
                                         const ProblemDef& problem);

/// Splits "(name a b)" into lower-cased tokens. Returns nullopt if the
/// text is not a single flat parenthesized list of identifiers.
std::optional<std::vector<std::string>> split_display_form(
    std::string_view text);

/// Resolves a display form against the schemas and typed objects without
/// materializing the full grounding. Returns nullopt when the name, arity,
/// an object or a type does not match.
std::optional<GroundAction> resolve_ground_action(const DomainDef& domain,
                                                  const ProblemDef& problem,
                                                  std::string_view display_form);

/// Grounded action set of a (domain, objects) pair with lookup by display
/// form. Immutable after construction; sub-problems that share objects
/// share one Grounding.
class Grounding {
 public:
  Grounding(std::shared_ptr<const DomainDef> domain, const ProblemDef& problem);

  const DomainDef& domain() const { return *domain_; }
  const std::shared_ptr<const DomainDef>& domain_ptr() const { return domain_; }
  const std::vector<GroundAction>& actions() const { return actions_; }

  /// Index of the action named by `display_form` (case-insensitive,
  /// whitespace-tolerant, argument-order-sensitive).
  std::optional<std::size_t> resolve(std::string_view display_form) const;

 private:
  std::shared_ptr<const DomainDef> domain_;
  std::vector<GroundAction> actions_;
  std::unordered_map<std::string, std::size_t> by_display_;
};

}  // namespace nstp

template <>
struct std::hash<nstp::StateKey> {
  std::size_t operator()(const nstp::StateKey& k) const noexcept {
    return std::hash<std::string>{}(k.str());
  }
};
