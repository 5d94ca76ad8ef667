#include <gtest/gtest.h>

#include "nstp/domains.hpp"
#include "nstp/error.hpp"
#include "nstp/pddl.hpp"
#include "nstp/strips.hpp"
#include "support.hpp"

namespace nstp {
namespace {

using test::corpus_dir;
using test::read_text;

const char* kTinyDomain = R"((define (domain tiny)
  (:predicates (p ?x))
  (:action move :parameters (?x) :precondition (and) :effect (p ?x))))";

DomainDef blocks4() { return parse_domain(read_text(corpus_dir() / "blocks-4ops-domain.pddl")); }

TEST(ParseDomain, MinimalDomain) {
  const DomainDef d = parse_domain(kTinyDomain);
  EXPECT_EQ(d.name, "tiny");
  ASSERT_EQ(d.actions.size(), 1u);
  EXPECT_EQ(d.predicates.size(), 1u);
  EXPECT_TRUE(d.actions[0].preconditions.empty());
}

TEST(ParseDomain, IpcBlocksworldHasFourActions) {
  const DomainDef d = blocks4();
  std::vector<std::string> names;
  for (const auto& a : d.actions) names.push_back(a.name);
  EXPECT_EQ(names, (std::vector<std::string>{"pick-up", "put-down", "stack", "unstack"}));
  EXPECT_EQ(d.name, "blocks");
  // Hand count from the file: unstack has 3 preconditions, 2 adds, 3 deletes.
  const ActionSchema* unstack = d.find_action("unstack");
  ASSERT_NE(unstack, nullptr);
  EXPECT_EQ(unstack->preconditions.size(), 3u);
  EXPECT_EQ(unstack->add_effects.size(), 2u);
  EXPECT_EQ(unstack->del_effects.size(), 3u);
}

TEST(ParseDomain, RejectsAdl) {
  try {
    parse_domain("(define (domain d) (:requirements :adl) (:predicates (p)))");
    FAIL() << "expected UnsupportedFeature";
  } catch (const UnsupportedFeature& e) {
    EXPECT_EQ(e.feature(), "adl");
  }
}

TEST(ParseDomain, RejectsConditionalEffects) {
  EXPECT_THROW(parse_domain(R"((define (domain d) (:predicates (p) (q))
      (:action a :parameters () :precondition (p) :effect (when (p) (q)))))"),
               UnsupportedFeature);
}

TEST(ParseDomain, SyntaxErrorCarriesLocation) {
  try {
    parse_domain("(define (domain d)\n  (:predicates (p)");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_GE(e.line(), 1u);
  }
}

TEST(ParseDomain, UndeclaredPredicateIsSemanticError) {
  EXPECT_THROW(parse_domain(R"((define (domain d) (:predicates (p ?x))
      (:action a :parameters (?x) :precondition (q ?x) :effect (p ?x))))"),
               SemanticError);
}

TEST(ParseDomain, ArityMismatchIsSemanticError) {
  EXPECT_THROW(parse_domain(R"((define (domain d) (:predicates (p ?x))
      (:action a :parameters (?x ?y) :precondition (p ?x ?y) :effect (p ?x))))"),
               SemanticError);
}

TEST(ParseDomain, UndeclaredTypeIsSemanticError) {
  EXPECT_THROW(parse_domain(R"((define (domain d) (:requirements :typing) (:types a)
      (:predicates (p ?x - b))))"),
               SemanticError);
}

TEST(ParseDomain, IdentifiersAreLowerCased) {
  const DomainDef d = parse_domain(R"((DEFINE (DOMAIN Mixed) (:PREDICATES (Holds ?X))
      (:ACTION Grab :PARAMETERS (?X) :PRECONDITION (and) :EFFECT (Holds ?X))))");
  EXPECT_EQ(d.name, "mixed");
  EXPECT_EQ(d.actions[0].name, "grab");
  EXPECT_EQ(d.predicates[0].name, "holds");
}

TEST(ParseDomain, NegativePreconditionsAndSubtypes) {
  const DomainDef d = parse_domain(read_text(corpus_dir() / "switches-domain.pddl"));
  EXPECT_TRUE(d.is_subtype("lamp", "device"));
  EXPECT_TRUE(d.is_subtype("lamp", "object"));
  EXPECT_FALSE(d.is_subtype("room", "device"));
  const ActionSchema* on = d.find_action("turn-on");
  ASSERT_NE(on, nullptr);
  const auto neg = std::count_if(on->preconditions.begin(), on->preconditions.end(),
                                 [](const Literal& l) { return !l.positive; });
  EXPECT_EQ(neg, 1);
}

TEST(ParseProblem, ThreeBlockInit) {
  const DomainDef d = generate(GenSpec{DomainKind::kBlocksworld, 3, 0}).domain;
  const ProblemDef p = parse_problem(R"((define (problem three) (:domain blocksworld-new)
      (:objects b1 b2 b3 - block t1 - position)
      (:init (on b1 b2) (on b2 b3) (on-table b3 t1))
      (:goal (and (clear b3)))))",
                                     d);
  EXPECT_EQ(p.init.size(), 3u);
  EXPECT_TRUE(p.init.contains(Atom{"on", {"b1", "b2"}}));
  EXPECT_TRUE(p.init.contains(Atom{"on-table", {"b3", "t1"}}));
}

TEST(ParseProblem, GoalWithUnknownObjectIsSemanticError) {
  const DomainDef d = blocks4();
  EXPECT_THROW(parse_problem(R"((define (problem p) (:domain blocks) (:objects a b)
      (:init) (:goal (and (on a z)))))",
                             d),
               SemanticError);
}

TEST(ParseProblem, IllTypedAtomIsSemanticError) {
  const DomainDef d = generate(GenSpec{DomainKind::kBlocksworld, 3, 0}).domain;
  EXPECT_THROW(parse_problem(R"((define (problem p) (:domain blocksworld-new)
      (:objects b1 - block t1 - position) (:init (on-table t1 b1)) (:goal (and (clear b1)))))",
                             d),
               SemanticError);
}

TEST(ParseProblem, EmptyInitIsLegal) {
  const DomainDef d = blocks4();
  const ProblemDef p =
      parse_problem("(define (problem p) (:domain blocks) (:objects a) (:init) (:goal (and (clear a))))", d);
  EXPECT_TRUE(p.init.empty());
}

TEST(ParseProblem, DomainNameMustMatch) {
  const DomainDef d = blocks4();
  EXPECT_THROW(parse_problem("(define (problem p) (:domain other) (:objects a) (:init) (:goal (clear a)))", d),
               SemanticError);
}

TEST(RoundTrip, CorpusFilesReparseToEqualAst) {
  std::vector<std::pair<std::string, std::string>> pairs = {
      {"blocks-4ops-domain.pddl", "blocks-4ops-probBLOCKS-4-0.pddl"},
      {"switches-domain.pddl", "switches-problem.pddl"}};
  for (const auto& [df, pf] : pairs) {
    const DomainDef d = parse_domain(read_text(corpus_dir() / df));
    const ProblemDef p = parse_problem(read_text(corpus_dir() / pf), d);
    const DomainDef d2 = parse_domain(serialize(d));
    EXPECT_EQ(d, d2) << df;
    EXPECT_EQ(p, parse_problem(serialize(p), d2)) << pf;
    EXPECT_EQ(serialize(d), serialize(d2));
  }
  for (auto kind : {DomainKind::kBarman, DomainKind::kBlocksworld, DomainKind::kGripper}) {
    const Instance inst = generate(GenSpec{kind, 4, 3});
    const DomainDef d2 = parse_domain(serialize(inst.domain));
    EXPECT_EQ(inst.domain, d2);
    EXPECT_EQ(inst.problem, parse_problem(serialize(inst.problem), d2));
  }
}

TEST(Serialize, InitOneAtomPerLine) {
  const DomainDef d = blocks4();
  const ProblemDef p = parse_problem(read_text(corpus_dir() / "blocks-4ops-probBLOCKS-4-0.pddl"), d);
  const std::string text = serialize(p);
  EXPECT_NE(text.find("  (:init\n    (clear a)\n    (clear b)\n"), std::string::npos) << text;
}

TEST(GoalBlocks, ReadsEveryBlockAndIgnoresProse) {
  const DomainDef d = blocks4();
  const ProblemDef p =
      parse_problem("(define (problem p) (:domain blocks) (:objects a b) (:init) (:goal (on a b)))", d);
  const auto blocks = parse_goal_blocks(
      "First:\n(:goal (and (clear a) (clear b)))\nthen\n(:goal (on a b))", d, p);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].size(), 2u);
  EXPECT_EQ(blocks[1].size(), 1u);
}

// ---------------------------------------------------------------------------
// Grounding

TEST(Grounding, OneParameterPerObject) {
  const DomainDef d = parse_domain(R"((define (domain g) (:requirements :typing) (:types block)
      (:predicates (p ?x - block)) (:action a :parameters (?x - block) :precondition (and) :effect (p ?x))))");
  const ProblemDef p = parse_problem(
      "(define (problem q) (:domain g) (:objects x y z - block) (:init) (:goal (and (p x))))", d);
  EXPECT_EQ(ground_actions(d, p).size(), 3u);
}

TEST(Grounding, ZeroObjectsOfATypeGivesNoActions) {
  const DomainDef d = parse_domain(R"((define (domain g) (:requirements :typing) (:types block hand)
      (:predicates (p ?x - block) (h ?y - hand))
      (:action a :parameters (?x - block ?y - hand) :precondition (and) :effect (p ?x))
      (:action b :parameters (?x - block) :precondition (and) :effect (p ?x))))");
  const ProblemDef p = parse_problem(
      "(define (problem q) (:domain g) (:objects x y - block) (:init) (:goal (and (p x))))", d);
  const auto acts = ground_actions(d, p);
  ASSERT_EQ(acts.size(), 2u);
  EXPECT_EQ(acts[0].name, "b");
}

TEST(Grounding, CountMatchesBruteForceEnumeration) {
  // 4-schema blocksworld, 3 blocks, 1 table position.
  const Instance inst = generate(GenSpec{DomainKind::kBlocksworld, 3, 0});
  const ProblemDef p = parse_problem(R"((define (problem c) (:domain blocksworld-new)
      (:objects b1 b2 b3 - block t1 - position) (:init) (:goal (and (clear b1)))))",
                                     inst.domain);
  const auto acts = ground_actions(inst.domain, p);
  EXPECT_EQ(acts.size(), test::naive_ground_count(inst.domain, p));
  const auto naive = test::naive_ground(inst.domain, p);
  ASSERT_EQ(acts.size(), naive.size());
  for (std::size_t i = 0; i < acts.size(); ++i) EXPECT_EQ(acts[i].display_form(), naive[i].display);
}

TEST(Grounding, OrderAndCountAgreeWithEnumerationOnAllGenerators) {
  for (auto kind : {DomainKind::kBarman, DomainKind::kBlocksworld, DomainKind::kGripper}) {
    const Instance inst = generate(GenSpec{kind, 3, 11});
    const auto acts = ground_actions(inst.domain, inst.problem);
    const auto naive = test::naive_ground(inst.domain, inst.problem);
    ASSERT_EQ(acts.size(), naive.size()) << to_string(kind);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      ASSERT_EQ(acts[i].display_form(), naive[i].display) << to_string(kind) << " #" << i;
    }
    EXPECT_EQ(ground_actions(inst.domain, inst.problem), acts);
  }
}

TEST(Grounding, SubtypedObjectsFillSupertypeParameters) {
  const DomainDef d = parse_domain(read_text(corpus_dir() / "switches-domain.pddl"));
  const ProblemDef p = parse_problem(read_text(corpus_dir() / "switches-problem.pddl"), d);
  EXPECT_EQ(ground_actions(d, p).size(), test::naive_ground_count(d, p));
}

}  // namespace
}  // namespace nstp
