#include "compiled_task.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <queue>

#include "nstp/search.hpp"

namespace nstp::detail {

namespace {

std::vector<WordMask> masks(const std::vector<AtomId>& atoms) {
  std::vector<WordMask> out;
  for (AtomId a : atoms) {
    const auto w = static_cast<std::uint32_t>(a >> 6);
    auto it = std::find_if(out.begin(), out.end(), [&](const WordMask& m) { return m.word == w; });
    if (it == out.end()) it = out.insert(out.end(), WordMask{w, 0});
    it->mask |= Word{1} << (a & 63);
  }
  return out;
}

}  // namespace

CompiledTask::CompiledTask(const std::vector<GroundAction>& actions, const State& init,
                           const GoalCond& goal) {
  std::vector<Atom> all(init.begin(), init.end());
  for (const auto& a : actions) {
    for (const auto& l : a.pre) all.push_back(l.atom);
    all.insert(all.end(), a.add.begin(), a.add.end());
    all.insert(all.end(), a.del.begin(), a.del.end());
  }
  for (const auto& l : goal.literals()) all.push_back(l.atom);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  atoms_ = std::move(all);
  words_ = std::max<std::size_t>(1, (atoms_.size() + 63) / 64);

  auto id = [&](const Atom& atom) {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), atom);
    return static_cast<AtomId>(it - atoms_.begin());
  };

  actions_.reserve(actions.size());
  for (const auto& a : actions) {
    CompiledAction c;
    for (const auto& l : a.pre) (l.positive ? c.pre_pos : c.pre_neg).push_back(id(l.atom));
    for (const auto& at : a.add) c.add.push_back(id(at));
    for (const auto& at : a.del) c.del.push_back(id(at));
    c.need = masks(c.pre_pos);
    c.forbid = masks(c.pre_neg);
    actions_.push_back(std::move(c));
  }
  init_bits_.assign(words_, 0);
  for (const auto& at : init) set(init_bits_.data(), id(at));

  // Atoms no action touches keep their initial value forever. Actions whose
  // static preconditions fail are never offered; the rest are filed under
  // their least common changing precondition.
  std::vector<bool> fluent(atoms_.size(), false);
  std::vector<std::uint32_t> frequency(atoms_.size(), 0);
  for (const auto& c : actions_) {
    for (AtomId p : c.add) fluent[p] = true;
    for (AtomId p : c.del) fluent[p] = true;
    for (AtomId p : c.pre_pos) ++frequency[p];
  }
  watch_.resize(atoms_.size());
  for (std::uint32_t i = 0; i < actions_.size(); ++i) {
    const auto& c = actions_[i];
    const bool dead =
        std::any_of(c.pre_pos.begin(), c.pre_pos.end(),
                    [&](AtomId p) { return !fluent[p] && !test(init_bits_.data(), p); }) ||
        std::any_of(c.pre_neg.begin(), c.pre_neg.end(),
                    [&](AtomId p) { return !fluent[p] && test(init_bits_.data(), p); });
    if (dead) continue;
    std::optional<AtomId> w;
    for (AtomId p : c.pre_pos) {
      if (!fluent[p]) continue;
      if (!w || frequency[p] < frequency[*w] || (frequency[p] == frequency[*w] && p < *w)) w = p;
    }
    if (w) {
      watch_[*w].push_back(i);
    } else {
      unconditional_.push_back(i);
    }
  }
  for (const auto& l : goal.literals()) (l.positive ? goal_pos_ : goal_neg_).push_back(id(l.atom));
}

bool CompiledTask::applicable(const Word* bits, const CompiledAction& a) const {
  for (const auto& m : a.need) {
    if ((bits[m.word] & m.mask) != m.mask) return false;
  }
  for (const auto& m : a.forbid) {
    if ((bits[m.word] & m.mask) != 0) return false;
  }
  return true;
}

bool CompiledTask::is_goal(const Word* bits) const {
  for (AtomId p : goal_pos_) {
    if (!test(bits, p)) return false;
  }
  for (AtomId p : goal_neg_) {
    if (test(bits, p)) return false;
  }
  return true;
}

void CompiledTask::applicable_actions(const Word* bits, std::vector<std::uint32_t>& out) const {
  out.clear();
  for (std::uint32_t i : unconditional_) {
    if (applicable(bits, actions_[i])) out.push_back(i);
  }
  for (std::size_t w = 0; w < words_; ++w) {
    for (Word word = bits[w]; word != 0; word &= word - 1) {
      const auto atom = static_cast<AtomId>(w * 64 + __builtin_ctzll(word));
      for (std::uint32_t i : watch_[atom]) {
        if (applicable(bits, actions_[i])) out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

void CompiledTask::apply(const Word* bits, const CompiledAction& a, Word* out) const {
  std::copy(bits, bits + words_, out);
  for (AtomId p : a.del) reset(out, p);
  for (AtomId p : a.add) set(out, p);
}

AdditiveHeuristic::AdditiveHeuristic(const CompiledTask& task)
    : task_(task),
      consumers_(task.num_atoms()),
      atom_cost_(task.num_atoms()),
      action_cost_(task.actions().size()),
      unsatisfied_(task.actions().size()) {
  for (std::uint32_t i = 0; i < task.actions().size(); ++i) {
    const auto& a = task.actions()[i];
    if (a.pre_pos.empty()) no_pre_actions_.push_back(i);
    for (AtomId p : a.pre_pos) consumers_[p].push_back(i);
  }
}

std::int64_t AdditiveHeuristic::evaluate(const Word* bits) {
  using Entry = std::pair<std::int64_t, AtomId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::fill(atom_cost_.begin(), atom_cost_.end(), kInfiniteCost);
  std::fill(action_cost_.begin(), action_cost_.end(), 0);
  for (std::size_t i = 0; i < unsatisfied_.size(); ++i) {
    unsatisfied_[i] = static_cast<std::uint32_t>(task_.actions()[i].pre_pos.size());
  }

  auto relax = [&](std::uint32_t action, std::int64_t cost) {
    for (AtomId q : task_.actions()[action].add) {
      if (cost < atom_cost_[q]) {
        atom_cost_[q] = cost;
        queue.emplace(cost, q);
      }
    }
  };

  for (AtomId a = 0; a < task_.num_atoms(); ++a) {
    if (CompiledTask::test(bits, a)) {
      atom_cost_[a] = 0;
      queue.emplace(0, a);
    }
  }
  for (std::uint32_t i : no_pre_actions_) relax(i, 1);

  // Stop once every goal atom has been settled.
  std::size_t goals_left = task_.goal_pos().size();
  while (!queue.empty() && goals_left > 0) {
    const auto [cost, atom] = queue.top();
    queue.pop();
    if (cost > atom_cost_[atom]) continue;
    for (AtomId g : task_.goal_pos()) {
      if (g == atom) --goals_left;
    }
    for (std::uint32_t i : consumers_[atom]) {
      action_cost_[i] += cost;
      if (--unsatisfied_[i] == 0) relax(i, action_cost_[i] + 1);
    }
  }

  std::int64_t total = 0;
  for (AtomId g : task_.goal_pos()) {
    if (atom_cost_[g] == kInfiniteCost) return kInfiniteCost;
    total += atom_cost_[g];
  }
  return total;
}

}  // namespace nstp::detail
