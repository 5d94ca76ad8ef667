#pragma once

// Prefix-coalesced state tree built from sampled plans, and Monte Carlo
// tree search over that fixed tree.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "nstp/random.hpp"
#include "nstp/sampling.hpp"
#include "nstp/search.hpp"

namespace nstp {

struct Edge {
  GroundAction action;
  std::size_t action_index = 0;  // into the sub-problem's grounding
  double weight = 0.0;           // max over the samples that used this edge
  std::size_t child = 0;
};

struct TreeNode {
  State state;
  std::optional<std::size_t> parent;
  std::vector<Edge> children;  // insertion order
  std::uint64_t visits = 0;    // N
  double total_reward = 0.0;   // Q
  bool is_goal = false;
};

struct StateTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  GoalCond goal;

  static constexpr std::size_t kRoot = 0;

  std::size_t size() const { return nodes.size(); }
  const TreeNode& root() const { return nodes[kRoot]; }
  /// Node indices from the root down to `node`, both included.
  std::vector<std::size_t> path_to(std::size_t node) const;
  /// Actions along path_to(node).
  Plan plan_to(std::size_t node) const;
};

/// Walks every plan from the root: an applicable step follows the sibling
/// edge with the same action (raising its weight to the max) or creates a
/// new edge and node; the first unresolvable or inapplicable step drops
/// the rest of that plan. When `accepted` is given it receives, per plan,
/// the number of steps that made it into the tree.
StateTree build_state_tree(const SubProblem& sub, const std::vector<WeightedPlan>& plans,
                           std::vector<std::size_t>* accepted = nullptr);

struct MctsParams {
  double exploration_c = 1.0;
  std::uint64_t max_iterations = 1000;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError unless c >= 0 and max_iterations >= 1.
  void check() const;
};

/// Q/N + c * sqrt(ln(parent_n) / N), natural log. Requires n > 0.
double ucb1(double q, std::uint64_t n, std::uint64_t parent_n, double c);

/// Descends from the root. At each node an unvisited child, if any, is
/// picked uniformly at random and returned; otherwise the child with the
/// highest UCB1 (lowest insertion index on ties) is entered. A node
/// without children is returned as is. Children flagged in `exhausted`
/// (fully visited subtrees) are skipped when it is non-null.
std::size_t select(const StateTree& tree, const MctsParams& params, Rng& rng,
                   const std::vector<bool>* exhausted = nullptr);

/// 1 if `start` is a goal node. Otherwise follows the highest-weight edge
/// (lowest index on ties) down to a node without children and returns
/// 1 / (1 + d) if that leaf is a goal, d being its edge distance from
/// `start`, and 0 if not. Leaves the statistics untouched.
double rollout(const StateTree& tree, std::size_t start);

/// N += 1 and Q += reward for every node on `path`.
void backpropagate(StateTree& tree, const std::vector<std::size_t>& path, double reward);

/// Iteration-at-a-time search, so tests can observe the statistics.
class MctsSearcher {
 public:
  enum class Status { kRunning, kSolved, kExhausted };

  struct Iteration {
    std::vector<std::size_t> path;
    double reward = 0.0;
    bool goal_selected = false;
  };

  MctsSearcher(StateTree& tree, const MctsParams& params);

  /// Runs one select / rollout / backpropagate round. Returns nullopt once
  /// the search has stopped (goal found or tree exhausted).
  std::optional<Iteration> step();

  Status status() const { return status_; }
  std::uint64_t iterations() const { return iterations_; }
  /// Goal node reached, when solved.
  std::optional<std::size_t> goal_node() const { return goal_node_; }

 private:
  void mark_exhausted(const std::vector<std::size_t>& path);

  StateTree& tree_;
  MctsParams params_;
  Rng rng_;
  std::vector<bool> exhausted_;
  Status status_ = Status::kRunning;
  std::uint64_t iterations_ = 0;
  std::optional<std::size_t> goal_node_;
};

/// Repeats MctsSearcher::step up to max_iterations. Solved plans are the
/// root-to-goal action paths; a fully visited tree without goal nodes is
/// reported proven-unsolvable. `expansions` counts iterations. When
/// `trace` is non-null it receives one JSON object per iteration.
SearchResult mcts_search(StateTree& tree, const MctsParams& params,
                         nlohmann::json* trace = nullptr);

}  // namespace nstp
