#include <algorithm>
#include <map>
#include <set>

#include "nstp/domains.hpp"
#include "nstp/pipeline.hpp"

namespace nstp {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kLlm:
      return "llm";
    case Provenance::kScripted:
      return "scripted";
    case Provenance::kManual:
      return "manual";
  }
  return "unknown";
}

void SubgoalSequence::check(const GoalCond& goal) const {
  if (subgoals.empty()) throw DecompositionFailed("empty subgoal sequence");
  if (!subgoals.back().entails(goal)) {
    throw DecompositionFailed("last subgoal does not entail the problem goal");
  }
}

std::string serialize_subgoals(const SubgoalSequence& seq) {
  std::string out;
  for (const auto& g : seq.subgoals) out += "(:goal " + serialize_goal(g, 2) + ")\n";
  return out;
}

SubgoalSequence parse_subgoals(std::string_view text, const DomainDef& domain,
                               const ProblemDef& problem) {
  SubgoalSequence seq;
  seq.provenance = Provenance::kManual;
  seq.subgoals = parse_goal_blocks(text, domain, problem);
  return seq;
}

namespace {

GoalCond merge(const GoalCond& a, const std::vector<Literal>& extra) {
  std::vector<Literal> lits = a.literals();
  lits.insert(lits.end(), extra.begin(), extra.end());
  return GoalCond(std::move(lits));
}

// Makes sure the sequence ends in a superset of the goal.
void close_with_goal(SubgoalSequence& seq, const GoalCond& goal) {
  if (seq.subgoals.empty()) {
    seq.subgoals.push_back(goal);
  } else if (!seq.subgoals.back().entails(goal)) {
    seq.subgoals.back() = merge(seq.subgoals.back(), goal.literals());
  }
}

Literal pos(std::string predicate, std::vector<std::string> args) {
  return Literal{Atom{std::move(predicate), std::move(args)}, true};
}

class IdentityDecomposer final : public Decomposer {
 public:
  std::string name() const override { return "none"; }
  SubgoalSequence decompose(const DomainDef&, const ProblemDef& problem) override {
    return SubgoalSequence{{problem.goal}, Provenance::kScripted};
  }
};

constexpr std::size_t kTablePositions = 6;

// Groups stack goal literals into layers: the on-table literal, then each
// (on x y) once y has been placed. Literals that fit nowhere come last.
std::vector<std::vector<Literal>> bottom_up(const std::vector<Literal>& lits) {
  std::vector<std::vector<Literal>> layers;
  std::set<std::string> placed;
  std::vector<bool> used(lits.size(), false);
  for (bool progress = true; progress;) {
    progress = false;
    std::vector<Literal> layer;
    std::vector<std::string> newly;
    for (std::size_t i = 0; i < lits.size(); ++i) {
      const auto& a = lits[i].atom;
      if (used[i] || !lits[i].positive || a.args.empty()) continue;
      const bool ready = a.predicate == "on-table" || (a.predicate == "on" && a.args.size() == 2 &&
                                                      placed.count(a.args[1]));
      if (!ready) continue;
      used[i] = true;
      layer.push_back(lits[i]);
      newly.push_back(a.args[0]);
    }
    if (!layer.empty()) {
      placed.insert(newly.begin(), newly.end());
      layers.push_back(std::move(layer));
      progress = true;
    }
  }
  std::vector<Literal> rest;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (!used[i]) rest.push_back(lits[i]);
  }
  if (!rest.empty()) layers.push_back(std::move(rest));
  return layers;
}

class BlocksworldDecomposer final : public Decomposer {
 public:
  std::string name() const override { return "blocksworld-new"; }

  SubgoalSequence decompose(const DomainDef&, const ProblemDef& problem) override {
    // Initial stacks, bottom to top, ordered by table position.
    std::map<std::string, std::string> above;  // below -> above
    std::map<std::string, std::string> base;   // position -> bottom block
    for (const auto& a : problem.init) {
      if (a.predicate == "on" && a.args.size() == 2) above[a.args[1]] = a.args[0];
      if (a.predicate == "on-table" && a.args.size() == 2) base[a.args[1]] = a.args[0];
    }
    std::map<std::string, std::size_t> stack_of;
    std::vector<std::pair<std::string, std::vector<std::string>>> stacks;
    for (const auto& [position, bottom] : base) {
      std::vector<std::string> blocks;
      for (std::string b = bottom; !b.empty();) {
        if (stack_of.count(b)) break;
        stack_of[b] = stacks.size();
        blocks.push_back(b);
        auto it = above.find(b);
        b = it == above.end() ? std::string() : it->second;
      }
      stacks.emplace_back(position, std::move(blocks));
    }

    // A goal literal belongs to the stack of its first argument.
    std::vector<std::vector<Literal>> targets(stacks.size());
    for (const auto& l : problem.goal.literals()) {
      if (l.atom.args.empty()) continue;
      auto it = stack_of.find(l.atom.args[0]);
      if (it != stack_of.end()) targets[it->second].push_back(l);
    }

    SubgoalSequence seq;
    seq.provenance = Provenance::kScripted;
    GoalCond done;
    for (std::size_t s = 0; s < stacks.size(); ++s) {
      const bool holds = std::all_of(targets[s].begin(), targets[s].end(), [&](const Literal& l) {
        return problem.init.contains(l.atom) == l.positive;
      });
      if (holds) continue;
      const auto& blocks = stacks[s].second;
      if (blocks.size() < kTablePositions) {
        std::vector<Literal> clear_all;
        for (const auto& b : blocks) clear_all.push_back(pos("clear", {b}));
        clear_all.push_back(pos("clear-table", {stacks[s].first}));
        seq.subgoals.push_back(merge(done, clear_all));
        done = merge(done, targets[s]);
        seq.subgoals.push_back(done);
        continue;
      }
      // Too tall to lay out with its own position free: rebuild the target
      // stack one block at a time, bottom first.
      for (const auto& layer : bottom_up(targets[s])) {
        done = merge(done, layer);
        seq.subgoals.push_back(done);
      }
    }
    close_with_goal(seq, problem.goal);
    return seq;
  }
};

class BarmanDecomposer final : public Decomposer {
 public:
  std::string name() const override { return "barman-new"; }

  SubgoalSequence decompose(const DomainDef&, const ProblemDef& problem) override {
    SubgoalSequence seq;
    seq.provenance = Provenance::kScripted;
    GoalCond done;
    for (const auto& l : problem.goal.literals()) {
      if (l.atom.predicate != "contains" || !l.positive) continue;
      done = merge(done, {l});
      seq.subgoals.push_back(done);
    }
    close_with_goal(seq, problem.goal);
    return seq;
  }
};

class GripperDecomposer final : public Decomposer {
 public:
  std::string name() const override { return "gripper-new"; }

  SubgoalSequence decompose(const DomainDef&, const ProblemDef& problem) override {
    std::map<std::string, std::vector<Literal>> by_room;
    for (const auto& l : problem.goal.literals()) {
      if (l.atom.predicate == "at" && l.atom.args.size() == 2 && l.positive) {
        by_room[l.atom.args[1]].push_back(l);
      }
    }
    SubgoalSequence seq;
    seq.provenance = Provenance::kScripted;
    GoalCond done;
    for (const auto& [room, lits] : by_room) {
      done = merge(done, lits);
      seq.subgoals.push_back(done);
    }
    close_with_goal(seq, problem.goal);
    return seq;
  }
};

class FileDecomposer final : public Decomposer {
 public:
  explicit FileDecomposer(std::string text) : text_(std::move(text)) {}
  std::string name() const override { return "manual"; }
  SubgoalSequence decompose(const DomainDef& domain, const ProblemDef& problem) override {
    return parse_subgoals(text_, domain, problem);
  }

 private:
  std::string text_;
};

}  // namespace

std::unique_ptr<Decomposer> scripted_decomposer(std::string_view domain_kind) {
  if (normalize_identifier(domain_kind) == "none") return std::make_unique<IdentityDecomposer>();
  switch (parse_domain_kind(domain_kind)) {
    case DomainKind::kBlocksworld:
      return std::make_unique<BlocksworldDecomposer>();
    case DomainKind::kBarman:
      return std::make_unique<BarmanDecomposer>();
    case DomainKind::kGripper:
      return std::make_unique<GripperDecomposer>();
  }
  throw UnknownDomainKind("unknown domain kind '" + std::string(domain_kind) + "'");
}

std::unique_ptr<Decomposer> file_decomposer(std::string text) {
  return std::make_unique<FileDecomposer>(std::move(text));
}

}  // namespace nstp
