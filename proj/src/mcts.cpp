#include "nstp/mcts.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "nstp/error.hpp"

namespace nstp {

std::vector<std::size_t> StateTree::path_to(std::size_t node) const {
  std::vector<std::size_t> path;
  for (std::optional<std::size_t> cur = node; cur; cur = nodes[*cur].parent) path.push_back(*cur);
  std::reverse(path.begin(), path.end());
  return path;
}

Plan StateTree::plan_to(std::size_t node) const {
  Plan plan;
  const auto path = path_to(node);
  for (std::size_t i = 1; i < path.size(); ++i) {
    for (const auto& e : nodes[path[i - 1]].children) {
      if (e.child == path[i]) {
        plan.steps.push_back(e.action.display_form());
        break;
      }
    }
  }
  return plan;
}

StateTree build_state_tree(const SubProblem& sub, const std::vector<WeightedPlan>& plans,
                           std::vector<std::size_t>* accepted) {
  StateTree tree;
  tree.goal = sub.problem.goal;
  TreeNode root;
  root.state = sub.problem.init;
  root.is_goal = satisfies(root.state, tree.goal);
  tree.nodes.push_back(std::move(root));
  if (accepted) accepted->clear();

  const auto& actions = sub.grounding->actions();
  for (const auto& plan : plans) {
    std::size_t cur = StateTree::kRoot;
    std::size_t taken = 0;
    for (const auto& step : plan.steps) {
      const auto index = sub.grounding->resolve(step.action);
      if (!index || !applicable(tree.nodes[cur].state, actions[*index])) break;
      auto& edges = tree.nodes[cur].children;
      auto it = std::find_if(edges.begin(), edges.end(),
                             [&](const Edge& e) { return e.action_index == *index; });
      if (it != edges.end()) {
        it->weight = std::max(it->weight, step.weight);
        cur = it->child;
      } else {
        TreeNode child;
        child.state = apply(tree.nodes[cur].state, actions[*index]);
        child.parent = cur;
        child.is_goal = satisfies(child.state, tree.goal);
        const std::size_t id = tree.nodes.size();
        tree.nodes.push_back(std::move(child));
        tree.nodes[cur].children.push_back(Edge{actions[*index], *index, step.weight, id});
        cur = id;
      }
      ++taken;
    }
    if (accepted) accepted->push_back(taken);
  }
  return tree;
}

void MctsParams::check() const {
  if (!(exploration_c >= 0.0)) throw ConfigError("exploration constant must be >= 0");
  if (max_iterations < 1) throw ConfigError("max-iterations must be >= 1");
}

double ucb1(double q, std::uint64_t n, std::uint64_t parent_n, double c) {
  return q / static_cast<double>(n) +
         c * std::sqrt(std::log(static_cast<double>(parent_n)) / static_cast<double>(n));
}

std::size_t select(const StateTree& tree, const MctsParams& params, Rng& rng,
                   const std::vector<bool>* exhausted) {
  std::size_t cur = StateTree::kRoot;
  for (;;) {
    const auto& node = tree.nodes[cur];
    std::vector<std::size_t> unvisited;
    for (const auto& e : node.children) {
      if (tree.nodes[e.child].visits == 0) unvisited.push_back(e.child);
    }
    if (!unvisited.empty()) return unvisited[rng.below(unvisited.size())];

    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (const auto& e : node.children) {
      if (exhausted && (*exhausted)[e.child]) continue;
      const auto& child = tree.nodes[e.child];
      const double score = ucb1(child.total_reward, child.visits, node.visits, params.exploration_c);
      if (!best || score > best_score) {
        best = e.child;
        best_score = score;
      }
    }
    if (!best) return cur;
    cur = *best;
  }
}

double rollout(const StateTree& tree, std::size_t start) {
  if (tree.nodes[start].is_goal) return 1.0;
  std::size_t cur = start;
  std::size_t depth = 0;
  while (!tree.nodes[cur].children.empty()) {
    const auto& edges = tree.nodes[cur].children;
    const Edge* best = &edges.front();
    for (const auto& e : edges) {
      if (e.weight > best->weight) best = &e;
    }
    cur = best->child;
    ++depth;
  }
  if (!tree.nodes[cur].is_goal) return 0.0;
  return 1.0 / (1.0 + static_cast<double>(depth));
}

void backpropagate(StateTree& tree, const std::vector<std::size_t>& path, double reward) {
  for (std::size_t id : path) {
    tree.nodes[id].visits += 1;
    tree.nodes[id].total_reward += reward;
  }
}

MctsSearcher::MctsSearcher(StateTree& tree, const MctsParams& params)
    : tree_(tree), params_(params), rng_(params.rng_seed), exhausted_(tree.size(), false) {
  params_.check();
}

void MctsSearcher::mark_exhausted(const std::vector<std::size_t>& path) {
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const auto& node = tree_.nodes[*it];
    if (node.visits == 0) return;
    const bool done = std::all_of(node.children.begin(), node.children.end(),
                                  [&](const Edge& e) { return exhausted_[e.child]; });
    if (!done) return;
    exhausted_[*it] = true;
  }
}

std::optional<MctsSearcher::Iteration> MctsSearcher::step() {
  if (status_ != Status::kRunning) return std::nullopt;
  if (iterations_ == 0 && tree_.root().is_goal) {
    ++iterations_;
    status_ = Status::kSolved;
    goal_node_ = StateTree::kRoot;
    return Iteration{{StateTree::kRoot}, 1.0, true};
  }
  if (exhausted_[StateTree::kRoot]) {
    status_ = Status::kExhausted;
    return std::nullopt;
  }

  ++iterations_;
  const std::size_t selected = select(tree_, params_, rng_, &exhausted_);
  Iteration it;
  it.path = tree_.path_to(selected);
  if (tree_.nodes[selected].is_goal) {
    status_ = Status::kSolved;
    goal_node_ = selected;
    it.reward = 1.0;
    it.goal_selected = true;
    return it;
  }
  it.reward = rollout(tree_, selected);
  backpropagate(tree_, it.path, it.reward);
  mark_exhausted(it.path);
  if (exhausted_[StateTree::kRoot]) status_ = Status::kExhausted;
  return it;
}

SearchResult mcts_search(StateTree& tree, const MctsParams& params, nlohmann::json* trace) {
  const auto start = std::chrono::steady_clock::now();
  MctsSearcher searcher(tree, params);
  if (trace) *trace = nlohmann::json::array();
  while (searcher.iterations() < params.max_iterations) {
    const auto it = searcher.step();
    if (!it) break;
    if (trace) {
      nlohmann::json stats = nlohmann::json::array();
      for (std::size_t id : it->path) {
        stats.push_back({{"node", id}, {"n", tree.nodes[id].visits}, {"q", tree.nodes[id].total_reward}});
      }
      trace->push_back({{"iteration", searcher.iterations()},
                        {"path", it->path},
                        {"reward", it->reward},
                        {"goal", it->goal_selected},
                        {"stats", std::move(stats)}});
    }
    if (searcher.status() != MctsSearcher::Status::kRunning) break;
  }

  SearchResult result;
  result.expansions = searcher.iterations();
  switch (searcher.status()) {
    case MctsSearcher::Status::kSolved:
      result.outcome = Outcome::kSolved;
      result.plan = tree.plan_to(*searcher.goal_node());
      break;
    case MctsSearcher::Status::kExhausted:
      result.outcome = Outcome::kProvenUnsolvable;
      break;
    case MctsSearcher::Status::kRunning:
      result.outcome = Outcome::kBudgetExhausted;
      break;
  }
  result.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return result;
}

}  // namespace nstp
