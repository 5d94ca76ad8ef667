#include "nstp/search.hpp"

#include <algorithm>
#include <deque>
#include <queue>

#include "compiled_task.hpp"
#include "nstp/error.hpp"

namespace nstp {

using detail::CompiledTask;
using detail::Word;

std::string to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::kBfsOptimal:
      return "bfs-optimal";
    case SearchMode::kGbfsHadd:
      return "gbfs-hadd";
    case SearchMode::kAstarHadd:
      return "astar-hadd";
  }
  return "unknown";
}

SearchMode parse_search_mode(std::string_view text) {
  if (text == "bfs-optimal" || text == "bfs") return SearchMode::kBfsOptimal;
  if (text == "gbfs-hadd" || text == "gbfs") return SearchMode::kGbfsHadd;
  if (text == "astar-hadd" || text == "astar") return SearchMode::kAstarHadd;
  throw ConfigError("unknown search mode '" + std::string(text) + "'");
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kSolved:
      return "solved";
    case Outcome::kProvenUnsolvable:
      return "proven-unsolvable";
    case Outcome::kBudgetExhausted:
      return "budget-exhausted";
  }
  return "unknown";
}

void SearchConfig::check() const {
  if (max_expansions == 0) throw ConfigError("max-expansions must be > 0");
  if (wall_clock_budget.count() <= 0) throw ConfigError("wall-clock budget must be > 0");
}

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

// Packed states, deduplicated through an open-addressing hash table.
class StateRegistry {
 public:
  static constexpr std::uint32_t kEmpty = 0xFFFFFFFFu;

  explicit StateRegistry(std::size_t words) : words_(words), table_(1024, kEmpty) {}

  std::size_t size() const { return count_; }
  const Word* get(std::uint32_t id) const { return data_.data() + id * words_; }

  /// Returns (id, inserted).
  std::pair<std::uint32_t, bool> insert(const Word* bits) {
    if ((count_ + 1) * 2 > table_.size()) grow();
    std::size_t slot = hash(bits) & (table_.size() - 1);
    for (;;) {
      const std::uint32_t id = table_[slot];
      if (id == kEmpty) break;
      if (std::equal(bits, bits + words_, get(id))) return {id, false};
      slot = (slot + 1) & (table_.size() - 1);
    }
    const auto id = static_cast<std::uint32_t>(count_++);
    data_.insert(data_.end(), bits, bits + words_);
    table_[slot] = id;
    return {id, true};
  }

 private:
  std::uint64_t hash(const Word* bits) const {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (std::size_t i = 0; i < words_; ++i) {
      h ^= bits[i] + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
      h *= 0xBF58476D1CE4E5B9ULL;
      h ^= h >> 31;
    }
    return h;
  }

  void grow() {
    std::vector<std::uint32_t> bigger(table_.size() * 2, kEmpty);
    for (std::uint32_t id = 0; id < count_; ++id) {
      std::size_t slot = hash(get(id)) & (bigger.size() - 1);
      while (bigger[slot] != kEmpty) slot = (slot + 1) & (bigger.size() - 1);
      bigger[slot] = id;
    }
    table_.swap(bigger);
  }

  std::size_t words_;
  std::size_t count_ = 0;
  std::vector<Word> data_;
  std::vector<std::uint32_t> table_;
};

constexpr std::uint32_t kNoParent = 0xFFFFFFFFu;

class Search {
 public:
  Search(const Grounding& grounding, const State& init, const GoalCond& goal,
         const SearchConfig& config)
      : grounding_(grounding),
        task_(grounding.actions(), init, goal),
        config_(config),
        registry_(task_.words()),
        start_(Clock::now()) {}

  SearchResult run() {
    config_.check();
    SearchResult result;
    const auto [root, inserted] = registry_.insert(task_.init_bits().data());
    record(root, kNoParent, 0, 0);
    if (task_.is_goal(registry_.get(root))) {
      result.plan = Plan{};
      result.outcome = Outcome::kSolved;
    } else if (config_.mode == SearchMode::kBfsOptimal) {
      breadth_first(root, result);
    } else {
      best_first(root, result);
    }
    result.expansions = expansions_;
    result.elapsed_ms = elapsed_ms(start_);
    return result;
  }

 private:
  void record(std::uint32_t id, std::uint32_t parent, std::uint32_t action, std::uint32_t g) {
    if (id >= parent_.size()) {
      parent_.resize(id + 1, kNoParent);
      action_.resize(id + 1, 0);
      g_.resize(id + 1, 0);
    }
    parent_[id] = parent;
    action_[id] = action;
    g_[id] = g;
  }

  bool out_of_budget() {
    if (expansions_ >= config_.max_expansions) return true;
    if ((expansions_ & 15) == 0 &&
        Clock::now() - start_ >= config_.wall_clock_budget) {
      return true;
    }
    return false;
  }

  Plan extract(std::uint32_t id) const {
    Plan plan;
    for (std::uint32_t cur = id; parent_[cur] != kNoParent; cur = parent_[cur]) {
      plan.steps.push_back(grounding_.actions()[action_[cur]].display_form());
    }
    std::reverse(plan.steps.begin(), plan.steps.end());
    return plan;
  }

  void breadth_first(std::uint32_t root, SearchResult& result) {
    std::deque<std::uint32_t> open{root};
    std::vector<Word> current(task_.words());
    std::vector<Word> next(task_.words());
    while (!open.empty()) {
      if (out_of_budget()) {
        result.outcome = Outcome::kBudgetExhausted;
        return;
      }
      const std::uint32_t id = open.front();
      open.pop_front();
      ++expansions_;
      std::copy(registry_.get(id), registry_.get(id) + task_.words(), current.begin());
      task_.applicable_actions(current.data(), applicable_);
      for (const std::uint32_t a : applicable_) {
        task_.apply(current.data(), task_.actions()[a], next.data());
        const auto [succ, inserted] = registry_.insert(next.data());
        if (!inserted) continue;
        record(succ, id, a, g_[id] + 1);
        if (task_.is_goal(next.data())) {
          result.plan = extract(succ);
          result.outcome = Outcome::kSolved;
          return;
        }
        open.push_back(succ);
      }
    }
    result.outcome = Outcome::kProvenUnsolvable;
  }

  struct Entry {
    std::int64_t key;
    std::uint64_t order;
    std::uint32_t id;
    std::uint32_t g;
    bool operator>(const Entry& o) const {
      return key != o.key ? key > o.key : order > o.order;
    }
  };

  void best_first(std::uint32_t root, SearchResult& result) {
    detail::AdditiveHeuristic heuristic(task_);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::vector<std::int64_t> h_cache;
    auto h_of = [&](std::uint32_t id, const Word* bits) {
      if (id >= h_cache.size()) h_cache.resize(id + 1, -1);
      if (h_cache[id] < 0) h_cache[id] = heuristic.evaluate(bits);
      return h_cache[id];
    };
    const bool greedy = config_.mode == SearchMode::kGbfsHadd;
    std::uint64_t order = 0;

    const std::int64_t h0 = h_of(root, registry_.get(root));
    if (h0 == kInfiniteCost) {
      result.outcome = Outcome::kProvenUnsolvable;
      return;
    }
    open.push(Entry{h0, order++, root, 0});
    std::vector<Word> current(task_.words());
    std::vector<Word> next(task_.words());
    while (!open.empty()) {
      const Entry e = open.top();
      open.pop();
      if (e.g != g_[e.id]) continue;  // stale: reached again more cheaply
      if (out_of_budget()) {
        result.outcome = Outcome::kBudgetExhausted;
        return;
      }
      ++expansions_;
      std::copy(registry_.get(e.id), registry_.get(e.id) + task_.words(), current.begin());
      task_.applicable_actions(current.data(), applicable_);
      for (const std::uint32_t a : applicable_) {
        task_.apply(current.data(), task_.actions()[a], next.data());
        const auto [succ, inserted] = registry_.insert(next.data());
        const std::uint32_t g = e.g + 1;
        if (!inserted && g >= g_[succ]) continue;
        record(succ, e.id, a, g);
        if (task_.is_goal(next.data())) {
          result.plan = extract(succ);
          result.outcome = Outcome::kSolved;
          return;
        }
        const std::int64_t h = h_of(succ, next.data());
        if (h == kInfiniteCost) continue;
        open.push(Entry{greedy ? h : g + h, order++, succ, g});
      }
    }
    result.outcome = Outcome::kProvenUnsolvable;
  }

  const Grounding& grounding_;
  CompiledTask task_;
  SearchConfig config_;
  StateRegistry registry_;
  Clock::time_point start_;
  std::uint64_t expansions_ = 0;
  std::vector<std::uint32_t> applicable_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> action_;
  std::vector<std::uint32_t> g_;
};

}  // namespace

SearchResult solve(const Grounding& grounding, const State& init, const GoalCond& goal,
                   const SearchConfig& config) {
  return Search(grounding, init, goal, config).run();
}

SearchResult solve(const DomainDef& domain, const ProblemDef& problem, const SearchConfig& config) {
  Grounding grounding(std::make_shared<const DomainDef>(domain), problem);
  return solve(grounding, problem.init, problem.goal, config);
}

std::int64_t h_add(const State& s, const GoalCond& g, const std::vector<GroundAction>& grounded) {
  CompiledTask task(grounded, s, g);
  detail::AdditiveHeuristic heuristic(task);
  return heuristic.evaluate(task.init_bits().data());
}

}  // namespace nstp
