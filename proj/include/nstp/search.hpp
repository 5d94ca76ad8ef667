#pragma once

// Built-in forward-search planner (breadth-first optimal, greedy best-first
// and A* over the additive heuristic) and an adapter for an external
// Fast-Downward-style planner binary.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nstp/pddl.hpp"
#include "nstp/strips.hpp"
#include "nstp/validator.hpp"

namespace nstp {

enum class SearchMode { kBfsOptimal, kGbfsHadd, kAstarHadd };

std::string to_string(SearchMode mode);
/// Accepts "bfs-optimal", "gbfs-hadd", "astar-hadd" (and "bfs", "gbfs",
/// "astar"). Throws ConfigError.
SearchMode parse_search_mode(std::string_view text);

struct SearchConfig {
  SearchMode mode = SearchMode::kBfsOptimal;
  std::uint64_t max_expansions = 2'000'000;
  std::chrono::milliseconds wall_clock_budget{60'000};

  /// Throws ConfigError unless both budgets are positive.
  void check() const;
};

enum class Outcome { kSolved, kProvenUnsolvable, kBudgetExhausted };

std::string to_string(Outcome outcome);

struct SearchResult {
  std::optional<Plan> plan;
  std::uint64_t expansions = 0;
  std::int64_t elapsed_ms = 0;
  Outcome outcome = Outcome::kBudgetExhausted;
};

/// Searches from `problem.init` to `problem.goal`. Unit action costs.
/// Ties break towards the lower grounded-action index, FIFO within equal
/// priority, so identical inputs give identical plans.
SearchResult solve(const DomainDef& domain, const ProblemDef& problem, const SearchConfig& config);

/// Same, reusing an existing grounding for a different start and goal.
SearchResult solve(const Grounding& grounding, const State& init, const GoalCond& goal,
                   const SearchConfig& config);

inline constexpr std::int64_t kInfiniteCost = std::numeric_limits<std::int64_t>::max();

/// Additive delete-relaxation estimate with unit costs: 0 iff the positive
/// goal literals hold in `s`, kInfiniteCost iff some positive goal atom is
/// unreachable in the relaxation. Negative goal literals cost 0.
std::int64_t h_add(const State& s, const GoalCond& g, const std::vector<GroundAction>& grounded);

/// Runs `<binary> <domain> <problem> --search <search_config>` in a scratch
/// directory with a wall-clock limit, reads the `sas_plan` file it writes
/// and validates that plan before reporting it solved.
///
/// Exit codes follow the Fast Downward convention: 0-3 with a plan file
/// mean solved, 10/11 proven unsolvable, 12 and 22-24 budget exhausted.
/// Throws ExternalUnavailable when the binary is missing or not executable
/// and ExternalFailure (with captured output) for anything else.
SearchResult solve_via_external(const std::filesystem::path& domain_path,
                                const std::filesystem::path& problem_path,
                                const std::filesystem::path& binary_path,
                                std::chrono::milliseconds budget,
                                const std::string& search_config = "astar(lmcut())");

}  // namespace nstp
