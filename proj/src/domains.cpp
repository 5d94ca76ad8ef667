#include "nstp/domains.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "nstp/error.hpp"
#include "nstp/random.hpp"

namespace nstp {

namespace {

constexpr std::string_view kBarmanDomain = R"((define (domain barman-new)
  (:requirements :strips :typing)
  (:types
    hand level beverage dispenser container - object
    ingredient cocktail - beverage
    shot shaker - container)
  (:predicates
    (ontable ?c - container)
    (holding ?h - hand ?c - container)
    (handempty ?h - hand)
    (empty ?c - container)
    (contains ?c - container ?b - beverage)
    (clean ?c - container)
    (used ?c - container ?b - beverage)
    (dispenses ?d - dispenser ?i - ingredient)
    (shaker-empty-level ?s - shaker ?l - level)
    (shaker-level ?s - shaker ?l - level)
    (next ?l1 ?l2 - level)
    (unshaked ?s - shaker)
    (shaked ?s - shaker)
    (cocktail-part1 ?c - cocktail ?i - ingredient)
    (cocktail-part2 ?c - cocktail ?i - ingredient))
  (:action grasp
    :parameters (?h - hand ?c - container)
    :precondition (and (ontable ?c) (handempty ?h))
    :effect (and (not (ontable ?c)) (not (handempty ?h)) (holding ?h ?c)))
  (:action leave
    :parameters (?h - hand ?c - container)
    :precondition (holding ?h ?c)
    :effect (and (not (holding ?h ?c)) (handempty ?h) (ontable ?c)))
  (:action fill-shot
    :parameters (?s - shot ?i - ingredient ?h1 ?h2 - hand ?d - dispenser)
    :precondition (and (holding ?h1 ?s) (handempty ?h2) (dispenses ?d ?i) (empty ?s) (clean ?s))
    :effect (and (not (empty ?s)) (contains ?s ?i) (not (clean ?s)) (used ?s ?i)))
  (:action refill-shot
    :parameters (?s - shot ?i - ingredient ?h1 ?h2 - hand ?d - dispenser)
    :precondition (and (holding ?h1 ?s) (handempty ?h2) (dispenses ?d ?i) (empty ?s) (used ?s ?i))
    :effect (and (not (empty ?s)) (contains ?s ?i)))
  (:action empty-shot
    :parameters (?h - hand ?p - shot ?b - beverage)
    :precondition (and (holding ?h ?p) (contains ?p ?b))
    :effect (and (not (contains ?p ?b)) (empty ?p)))
  (:action clean-shot
    :parameters (?s - shot ?b - beverage ?h1 ?h2 - hand)
    :precondition (and (holding ?h1 ?s) (handempty ?h2) (empty ?s) (used ?s ?b))
    :effect (and (not (used ?s ?b)) (clean ?s)))
  (:action pour-shot-to-clean-shaker
    :parameters (?s - shot ?i - ingredient ?d - shaker ?h1 - hand ?l ?l1 - level)
    :precondition (and (holding ?h1 ?s) (contains ?s ?i) (empty ?d) (clean ?d) (shaker-level ?d ?l) (next ?l ?l1))
    :effect (and (not (contains ?s ?i)) (empty ?s) (contains ?d ?i) (not (empty ?d)) (not (clean ?d)) (unshaked ?d) (not (shaker-level ?d ?l)) (shaker-level ?d ?l1)))
  (:action pour-shot-to-used-shaker
    :parameters (?s - shot ?i - ingredient ?d - shaker ?h1 - hand ?l ?l1 - level)
    :precondition (and (holding ?h1 ?s) (contains ?s ?i) (unshaked ?d) (shaker-level ?d ?l) (next ?l ?l1))
    :effect (and (not (contains ?s ?i)) (contains ?d ?i) (empty ?s) (not (shaker-level ?d ?l)) (shaker-level ?d ?l1)))
  (:action empty-shaker
    :parameters (?h - hand ?s - shaker ?b - cocktail ?l ?l1 - level)
    :precondition (and (holding ?h ?s) (contains ?s ?b) (shaked ?s) (shaker-level ?s ?l) (shaker-empty-level ?s ?l1))
    :effect (and (not (shaked ?s)) (not (shaker-level ?s ?l)) (shaker-level ?s ?l1) (not (contains ?s ?b)) (empty ?s)))
  (:action clean-shaker
    :parameters (?h1 ?h2 - hand ?s - shaker)
    :precondition (and (holding ?h1 ?s) (handempty ?h2) (empty ?s))
    :effect (and (clean ?s)))
  (:action shake
    :parameters (?b - cocktail ?d1 ?d2 - ingredient ?s - shaker ?h1 ?h2 - hand)
    :precondition (and (holding ?h1 ?s) (handempty ?h2) (contains ?s ?d1) (contains ?s ?d2) (cocktail-part1 ?b ?d1) (cocktail-part2 ?b ?d2) (unshaked ?s))
    :effect (and (not (unshaked ?s)) (not (contains ?s ?d1)) (not (contains ?s ?d2)) (shaked ?s) (contains ?s ?b)))
  (:action pour-shaker-to-shot
    :parameters (?b - beverage ?d - shaker ?s - shot ?h - hand ?l ?l1 - level)
    :precondition (and (holding ?h ?d) (shaked ?d) (empty ?s) (clean ?s) (contains ?d ?b) (shaker-level ?d ?l) (next ?l1 ?l))
    :effect (and (not (clean ?s)) (not (empty ?s)) (contains ?s ?b) (shaker-level ?d ?l1) (not (shaker-level ?d ?l)))))
)";

constexpr std::string_view kBlocksworldDomain = R"((define (domain blocksworld-new)
  (:requirements :strips :typing)
  (:types block position)
  (:predicates
    (on ?x - block ?y - block)
    (on-table ?x - block ?p - position)
    (clear ?x - block)
    (clear-table ?p - position)
    (holding ?x - block)
    (arm-empty))
  (:action pick-up
    :parameters (?x - block ?p - position)
    :precondition (and (clear ?x) (on-table ?x ?p) (arm-empty))
    :effect (and (holding ?x) (clear-table ?p)
                 (not (clear ?x)) (not (on-table ?x ?p)) (not (arm-empty))))
  (:action put-down
    :parameters (?x - block ?p - position)
    :precondition (and (holding ?x) (clear-table ?p))
    :effect (and (on-table ?x ?p) (clear ?x) (arm-empty)
                 (not (holding ?x)) (not (clear-table ?p))))
  (:action stack
    :parameters (?x - block ?y - block)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (arm-empty)
                 (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x - block ?y - block)
    :precondition (and (on ?x ?y) (clear ?x) (arm-empty))
    :effect (and (holding ?x) (clear ?y)
                 (not (on ?x ?y)) (not (clear ?x)) (not (arm-empty)))))
)";

constexpr std::string_view kGripperDomain = R"((define (domain gripper-new)
  (:requirements :strips :typing)
  (:types robot room ball gripper)
  (:predicates
    (at-robby ?r - robot ?x - room)
    (at ?b - ball ?x - room)
    (free ?r - robot ?g - gripper)
    (carry ?r - robot ?b - ball ?g - gripper))
  (:action move
    :parameters (?r - robot ?from ?to - room)
    :precondition (at-robby ?r ?from)
    :effect (and (at-robby ?r ?to) (not (at-robby ?r ?from))))
  (:action pick
    :parameters (?r - robot ?obj - ball ?room - room ?g - gripper)
    :precondition (and (at ?obj ?room) (at-robby ?r ?room) (free ?r ?g))
    :effect (and (carry ?r ?obj ?g) (not (at ?obj ?room)) (not (free ?r ?g))))
  (:action drop
    :parameters (?r - robot ?obj - ball ?room - room ?g - gripper)
    :precondition (and (carry ?r ?obj ?g) (at-robby ?r ?room))
    :effect (and (at ?obj ?room) (free ?r ?g) (not (carry ?r ?obj ?g)))))
)";

constexpr int kBlockPositions = 6;
constexpr int kGripperRobots = 4;
constexpr int kGripperRooms = 4;
constexpr int kBarmanIngredients = 3;

std::vector<std::string> numbered(std::string_view prefix, int count) {
  std::vector<std::string> names;
  for (int i = 1; i <= count; ++i) names.push_back(std::string(prefix) + std::to_string(i));
  return names;
}

void add_objects(ProblemDef& p, const std::vector<std::string>& names, std::string_view type) {
  for (const auto& n : names) p.objects.push_back(TypedName{n, std::string(type)});
}

Atom atom(std::string predicate, std::vector<std::string> args) {
  return Atom{std::move(predicate), std::move(args)};
}

GoalCond conjunction(const std::vector<Atom>& atoms) {
  std::vector<Literal> lits;
  for (const auto& a : atoms) lits.push_back(Literal{a, true});
  return GoalCond(std::move(lits));
}

// Round-trips the constructed problem through the parser so generated
// instances obey exactly the checks any file input would.
Instance finish(std::string_view domain_text, ProblemDef problem) {
  Instance inst;
  inst.domain = parse_domain(domain_text);
  inst.problem = parse_problem(serialize(problem), inst.domain);
  return inst;
}

void require_n(const GenSpec& spec) {
  if (spec.n < 1) throw ConfigError("instance size n must be >= 1");
}

// Cuts n into k positive parts.
std::vector<int> random_composition(Rng& rng, int n, int k) {
  std::vector<int> cuts(static_cast<std::size_t>(n - 1));
  std::iota(cuts.begin(), cuts.end(), 1);
  rng.shuffle(cuts);
  cuts.resize(static_cast<std::size_t>(k - 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> sizes;
  int prev = 0;
  for (int c : cuts) {
    sizes.push_back(c - prev);
    prev = c;
  }
  sizes.push_back(n - prev);
  return sizes;
}

}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::kBarman:
      return "barman-new";
    case DomainKind::kBlocksworld:
      return "blocksworld-new";
    case DomainKind::kGripper:
      return "gripper-new";
  }
  return "unknown";
}

DomainKind parse_domain_kind(std::string_view text) {
  const std::string t = normalize_identifier(text);
  if (t == "barman-new" || t == "barman") return DomainKind::kBarman;
  if (t == "blocksworld-new" || t == "blocksworld") return DomainKind::kBlocksworld;
  if (t == "gripper-new" || t == "gripper") return DomainKind::kGripper;
  throw UnknownDomainKind("unknown domain kind '" + std::string(text) + "'");
}

Instance gen_barman(const GenSpec& spec) {
  require_n(spec);
  Rng rng(spec.seed);
  const int n = spec.n;
  ProblemDef p;
  p.name = instance_stem(spec);
  p.domain_name = "barman-new";

  const auto shots = numbered("shot", n + 1);
  const auto ingredients = numbered("ingredient", kBarmanIngredients);
  const auto cocktails = numbered("cocktail", n);
  const auto dispensers = numbered("dispenser", kBarmanIngredients);
  const std::vector<std::string> hands = {"left", "right"};
  const std::vector<std::string> levels = {"l0", "l1", "l2"};
  add_objects(p, {"shaker1"}, "shaker");
  add_objects(p, hands, "hand");
  add_objects(p, shots, "shot");
  add_objects(p, ingredients, "ingredient");
  add_objects(p, cocktails, "cocktail");
  add_objects(p, dispensers, "dispenser");
  add_objects(p, levels, "level");

  std::vector<Atom> init;
  for (const auto& h : hands) init.push_back(atom("handempty", {h}));
  for (const auto& c : shots) {
    init.push_back(atom("ontable", {c}));
    init.push_back(atom("clean", {c}));
    init.push_back(atom("empty", {c}));
  }
  init.push_back(atom("ontable", {"shaker1"}));
  init.push_back(atom("clean", {"shaker1"}));
  init.push_back(atom("empty", {"shaker1"}));
  init.push_back(atom("shaker-empty-level", {"shaker1", "l0"}));
  init.push_back(atom("shaker-level", {"shaker1", "l0"}));
  init.push_back(atom("next", {"l0", "l1"}));
  init.push_back(atom("next", {"l1", "l2"}));
  for (int i = 0; i < kBarmanIngredients; ++i) {
    init.push_back(atom("dispenses", {dispensers[i], ingredients[i]}));
  }

  // Unordered pairs of distinct ingredients, drawn with replacement.
  static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& c : cocktails) {
    const auto& pair = kPairs[rng.below(3)];
    init.push_back(atom("cocktail-part1", {c, ingredients[pair[0]]}));
    init.push_back(atom("cocktail-part2", {c, ingredients[pair[1]]}));
  }
  std::vector<std::string> shot_order = shots;
  rng.shuffle(shot_order);
  std::vector<Atom> goal;
  for (int i = 0; i < n; ++i) goal.push_back(atom("contains", {shot_order[i], cocktails[i]}));

  p.init = State(std::move(init));
  p.goal = conjunction(goal);
  return finish(kBarmanDomain, std::move(p));
}

Instance gen_blocksworld(const GenSpec& spec) {
  require_n(spec);
  Rng rng(spec.seed);
  const int n = spec.n;
  ProblemDef p;
  p.name = instance_stem(spec);
  p.domain_name = "blocksworld-new";

  const auto blocks = numbered("b", n);
  const auto positions = numbered("t", kBlockPositions);
  add_objects(p, blocks, "block");
  add_objects(p, positions, "position");

  // With n >= 2 at least one stack gets two blocks, so the goal differs from init.
  const int max_stacks = n == 1 ? 1 : std::min(3, n - 1);
  const int k = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(max_stacks)));
  const std::vector<int> sizes = random_composition(rng, n, k);
  std::vector<std::string> order = blocks;
  rng.shuffle(order);
  std::vector<std::string> places = positions;
  rng.shuffle(places);
  places.resize(static_cast<std::size_t>(k));

  // stacks[i] lists blocks bottom to top.
  std::vector<std::vector<std::string>> stacks;
  std::size_t next = 0;
  for (int s : sizes) {
    stacks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(next),
                        order.begin() + static_cast<std::ptrdiff_t>(next + s));
    next += static_cast<std::size_t>(s);
  }

  auto describe = [&](const std::vector<std::vector<std::string>>& layout, bool with_clear) {
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& stack = layout[i];
      atoms.push_back(atom("on-table", {stack.front(), places[i]}));
      for (std::size_t j = 1; j < stack.size(); ++j) {
        atoms.push_back(atom("on", {stack[j], stack[j - 1]}));
      }
      if (with_clear) atoms.push_back(atom("clear", {stack.back()}));
    }
    return atoms;
  };

  std::vector<std::vector<std::string>> target = stacks;
  if (spec.cross_stack_goals && k > 1) {
    do {
      std::vector<std::string> all = order;
      rng.shuffle(all);
      std::size_t at = 0;
      for (auto& stack : target) {
        std::copy(all.begin() + static_cast<std::ptrdiff_t>(at),
                  all.begin() + static_cast<std::ptrdiff_t>(at + stack.size()), stack.begin());
        at += stack.size();
      }
    } while (target == stacks);
  } else {
    for (auto& stack : target) {
      if (stack.size() < 2) continue;
      const auto original = stack;
      do {
        rng.shuffle(stack);
      } while (stack == original);
    }
  }

  std::vector<Atom> init = describe(stacks, true);
  init.push_back(atom("arm-empty", {}));
  for (const auto& pos : positions) {
    if (std::find(places.begin(), places.end(), pos) == places.end()) {
      init.push_back(atom("clear-table", {pos}));
    }
  }

  p.init = State(std::move(init));
  p.goal = conjunction(describe(target, false));
  return finish(kBlocksworldDomain, std::move(p));
}

Instance gen_gripper(const GenSpec& spec) {
  require_n(spec);
  Rng rng(spec.seed);
  ProblemDef p;
  p.name = instance_stem(spec);
  p.domain_name = "gripper-new";

  const auto robots = numbered("robot", kGripperRobots);
  const auto rooms = numbered("room", kGripperRooms);
  const auto balls = numbered("ball", spec.n);
  const std::vector<std::string> grippers = {"left", "right"};
  add_objects(p, robots, "robot");
  add_objects(p, rooms, "room");
  add_objects(p, balls, "ball");
  add_objects(p, grippers, "gripper");

  auto room = [&] { return rooms[rng.below(rooms.size())]; };
  std::vector<Atom> init;
  std::vector<Atom> goal;
  for (const auto& r : robots) {
    init.push_back(atom("at-robby", {r, room()}));
    for (const auto& g : grippers) init.push_back(atom("free", {r, g}));
  }
  for (const auto& b : balls) init.push_back(atom("at", {b, room()}));
  p.init = State(std::move(init));
  do {
    goal.clear();
    for (const auto& b : balls) goal.push_back(atom("at", {b, room()}));
    for (const auto& r : robots) goal.push_back(atom("at-robby", {r, room()}));
    p.goal = conjunction(goal);
  } while (std::all_of(goal.begin(), goal.end(), [&](const Atom& a) { return p.init.contains(a); }));
  return finish(kGripperDomain, std::move(p));
}

Instance generate(const GenSpec& spec) {
  switch (spec.kind) {
    case DomainKind::kBarman:
      return gen_barman(spec);
    case DomainKind::kBlocksworld:
      return gen_blocksworld(spec);
    case DomainKind::kGripper:
      return gen_gripper(spec);
  }
  throw UnknownDomainKind("unknown domain kind");
}

std::string instance_stem(const GenSpec& spec) {
  return to_string(spec.kind) + "-n" + std::to_string(spec.n) + "-s" + std::to_string(spec.seed);
}

std::pair<std::filesystem::path, std::filesystem::path> write_instance(
    const GenSpec& spec, const std::filesystem::path& dir) {
  const Instance inst = generate(spec);
  const std::string stem = instance_stem(spec);
  const auto domain_path = dir / (stem + "-domain.pddl");
  const auto problem_path = dir / (stem + "-problem.pddl");
  for (const auto& [path, text] :
       {std::pair{domain_path, serialize(inst.domain)}, std::pair{problem_path, serialize(inst.problem)}}) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
  }
  return {domain_path, problem_path};
}

}  // namespace nstp
