#pragma once

// Integer-indexed form of a grounded task used by the search and the
// heuristic. Internal header.

#include <cstdint>
#include <vector>

#include "nstp/pddl.hpp"
#include "nstp/strips.hpp"

namespace nstp::detail {

using AtomId = std::uint32_t;
using Word = std::uint64_t;

struct WordMask {
  std::uint32_t word;
  Word mask;
};

struct CompiledAction {
  std::vector<AtomId> pre_pos;
  std::vector<AtomId> pre_neg;
  std::vector<AtomId> add;
  std::vector<AtomId> del;
  // pre_pos / pre_neg grouped by bitset word.
  std::vector<WordMask> need;
  std::vector<WordMask> forbid;
};

class CompiledTask {
 public:
  CompiledTask(const std::vector<GroundAction>& actions, const State& init, const GoalCond& goal);

  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t words() const { return words_; }
  const std::vector<CompiledAction>& actions() const { return actions_; }
  const std::vector<Word>& init_bits() const { return init_bits_; }
  const std::vector<AtomId>& goal_pos() const { return goal_pos_; }
  const std::vector<AtomId>& goal_neg() const { return goal_neg_; }

  static bool test(const Word* bits, AtomId a) { return (bits[a >> 6] >> (a & 63)) & 1U; }
  static void set(Word* bits, AtomId a) { bits[a >> 6] |= Word{1} << (a & 63); }
  static void reset(Word* bits, AtomId a) { bits[a >> 6] &= ~(Word{1} << (a & 63)); }

  bool applicable(const Word* bits, const CompiledAction& a) const;
  bool is_goal(const Word* bits) const;
  /// Indices of the actions applicable in `bits`, ascending.
  void applicable_actions(const Word* bits, std::vector<std::uint32_t>& out) const;
  /// Writes the successor of `bits` under `a` into `out` (words() words).
  void apply(const Word* bits, const CompiledAction& a, Word* out) const;

 private:
  std::vector<Atom> atoms_;
  std::size_t words_ = 1;
  std::vector<CompiledAction> actions_;
  std::vector<Word> init_bits_;
  std::vector<AtomId> goal_pos_;
  std::vector<AtomId> goal_neg_;
  // Each action is filed under its least common positive precondition.
  std::vector<std::vector<std::uint32_t>> watch_;
  std::vector<std::uint32_t> unconditional_;
};

/// Additive heuristic over a CompiledTask. Scratch buffers are reused
/// between calls, so one instance must not be shared across threads.
class AdditiveHeuristic {
 public:
  explicit AdditiveHeuristic(const CompiledTask& task);

  std::int64_t evaluate(const Word* bits);

 private:
  const CompiledTask& task_;
  // consumers_[atom] = actions with atom in pre_pos
  std::vector<std::vector<std::uint32_t>> consumers_;
  std::vector<std::uint32_t> no_pre_actions_;
  std::vector<std::int64_t> atom_cost_;
  std::vector<std::int64_t> action_cost_;
  std::vector<std::uint32_t> unsatisfied_;
};

}  // namespace nstp::detail
