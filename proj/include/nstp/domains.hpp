#pragma once

// Seeded instance generators for the barman-new, blocksworld-new and
// gripper-new benchmark domains.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "nstp/pddl.hpp"

namespace nstp {

enum class DomainKind { kBarman, kBlocksworld, kGripper };

/// "barman-new", "blocksworld-new", "gripper-new".
std::string to_string(DomainKind kind);
/// Accepts the names above and their short forms ("barman", ...).
/// Throws UnknownDomainKind.
DomainKind parse_domain_kind(std::string_view text);

struct GenSpec {
  DomainKind kind = DomainKind::kBlocksworld;
  int n = 3;
  std::uint64_t seed = 0;
  /// blocksworld-new only: let goal stacks mix blocks from different
  /// initial stacks instead of restacking each stack in place.
  bool cross_stack_goals = false;
};

struct Instance {
  DomainDef domain;
  ProblemDef problem;
};

/// Dual-arm IPC barman: 3 ingredients and dispensers, n + 1 shot glasses,
/// one shaker, goal = n cocktails in distinct shots. Requires n >= 1.
Instance gen_barman(const GenSpec& spec);
/// n blocks in 1-3 stacks over 6 table positions; the goal reorders every
/// stack of two or more blocks. Requires n >= 1.
Instance gen_blocksworld(const GenSpec& spec);
/// 4 robots with left/right grippers, 4 rooms, n balls; random initial
/// and goal rooms for balls and robots. Requires n >= 1.
Instance gen_gripper(const GenSpec& spec);

/// Dispatches on spec.kind. Throws ConfigError when n < 1.
Instance generate(const GenSpec& spec);

/// "<kind>-n<N>-s<SEED>"
std::string instance_stem(const GenSpec& spec);

/// Writes "<stem>-domain.pddl" and "<stem>-problem.pddl" into `dir` and
/// returns their paths. Throws IoError.
std::pair<std::filesystem::path, std::filesystem::path> write_instance(
    const GenSpec& spec, const std::filesystem::path& dir);

}  // namespace nstp
