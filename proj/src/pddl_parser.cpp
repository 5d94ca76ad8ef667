#include <algorithm>
#include <set>

#include "nstp/error.hpp"
#include "nstp/pddl.hpp"
#include "sexpr.hpp"

namespace nstp {

namespace {

using detail::SExpr;

const std::set<std::string, std::less<>> kSupportedRequirements = {
    "strips", "typing", "negative-preconditions"};

[[noreturn]] void fail(const SExpr& at, const std::string& message) {
  throw SyntaxError(at.line, at.column, message);
}

std::string where(const SExpr& at) {
  return " (line " + std::to_string(at.line) + ")";
}

const SExpr& expect_list(const SExpr& e, std::string_view what) {
  if (!e.is_list) fail(e, "expected " + std::string(what) + ", found '" + e.token + "'");
  return e;
}

const std::string& expect_token(const SExpr& e, std::string_view what) {
  if (e.is_list) fail(e, "expected " + std::string(what) + ", found '('");
  return e.token;
}

std::string expect_name(const SExpr& e, std::string_view what) {
  const std::string& t = expect_token(e, what);
  if (t.empty() || t.front() == '?' || t.front() == ':' || t == "-") {
    fail(e, "expected " + std::string(what) + ", found '" + t + "'");
  }
  return t;
}

// Parses "a b - t c - u d" style lists. Variables are accepted when
// `variables` is set, plain names otherwise.
std::vector<TypedName> parse_typed_list(const std::vector<SExpr>& items, std::size_t first,
                                        bool variables) {
  std::vector<TypedName> out;
  std::size_t pending = 0;
  for (std::size_t i = first; i < items.size(); ++i) {
    const SExpr& e = items[i];
    if (e.is_list) {
      if (e.has_head("either")) throw UnsupportedFeature("either");
      fail(e, "expected a name in typed list, found '('");
    }
    if (e.token == "-") {
      if (i + 1 >= items.size()) fail(e, "expected type name after '-'");
      const SExpr& type_expr = items[i + 1];
      if (type_expr.has_head("either")) throw UnsupportedFeature("either");
      const std::string type = expect_name(type_expr, "type name");
      if (pending == 0) fail(e, "expected a name before '-'");
      for (std::size_t k = out.size() - pending; k < out.size(); ++k) out[k].type = type;
      pending = 0;
      ++i;
      continue;
    }
    const bool is_var = !e.token.empty() && e.token.front() == '?';
    if (variables != is_var) {
      fail(e, variables ? "expected a variable ('?name'), found '" + e.token + "'"
                        : "expected an object name, found '" + e.token + "'");
    }
    if (!variables) expect_name(e, "object name");
    out.push_back(TypedName{e.token, std::string(kRootType)});
    ++pending;
  }
  return out;
}

Atom parse_atom_expr(const SExpr& e) {
  expect_list(e, "atom");
  if (e.items.empty()) fail(e, "expected predicate name, found '()'");
  Atom atom;
  atom.predicate = expect_name(e.items.front(), "predicate name");
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    atom.args.push_back(expect_token(e.items[i], "argument"));
  }
  return atom;
}

void reject_non_strips_formula(const SExpr& e) {
  if (!e.is_list || e.items.empty() || e.items.front().is_list) return;
  const std::string& head = e.items.front().token;
  if (head == "or" || head == "imply") throw UnsupportedFeature("disjunctive-preconditions");
  if (head == "exists" || head == "forall") throw UnsupportedFeature("quantified-preconditions");
  if (head == "when") throw UnsupportedFeature("conditional-effects");
  if (head == "=") throw UnsupportedFeature("equality");
  if (head == "<" || head == ">" || head == "<=" || head == ">=" || head == "increase" ||
      head == "decrease" || head == "assign" || head == "scale-up" || head == "scale-down") {
    throw UnsupportedFeature("numeric-fluents");
  }
}

// Flattens nested conjunctions of (possibly negated) atoms.
void collect_literals(const SExpr& e, std::vector<Literal>& out) {
  expect_list(e, "formula");
  if (e.items.empty()) return;  // "()" is the empty conjunction
  reject_non_strips_formula(e);
  if (e.has_head("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) collect_literals(e.items[i], out);
    return;
  }
  if (e.has_head("not")) {
    if (e.items.size() != 2) fail(e, "expected exactly one atom inside (not ...)");
    reject_non_strips_formula(e.items[1]);
    if (e.items[1].has_head("and") || e.items[1].has_head("not")) {
      throw UnsupportedFeature("disjunctive-preconditions");
    }
    out.push_back(Literal{parse_atom_expr(e.items[1]), false});
    return;
  }
  out.push_back(Literal{parse_atom_expr(e), true});
}

class DomainBuilder {
 public:
  DomainDef build(const SExpr& root) {
    expect_list(root, "(define ...)");
    if (!root.has_head("define")) fail(root, "expected 'define'");
    if (root.items.size() < 2 || !root.items[1].has_head("domain") ||
        root.items[1].items.size() != 2) {
      fail(root, "expected (domain <name>)");
    }
    domain_.name = expect_name(root.items[1].items[1], "domain name");
    for (std::size_t i = 2; i < root.items.size(); ++i) section(root.items[i]);
    return std::move(domain_);
  }

 private:
  void section(const SExpr& s) {
    expect_list(s, "domain section");
    if (s.items.empty() || s.items.front().is_list) fail(s, "expected section keyword");
    const std::string& key = s.items.front().token;
    if (key == ":requirements") {
      requirements(s);
    } else if (key == ":types") {
      types(s);
    } else if (key == ":predicates") {
      predicates(s);
    } else if (key == ":action") {
      action(s);
    } else if (key == ":constants") {
      throw UnsupportedFeature("constants");
    } else if (key == ":functions") {
      throw UnsupportedFeature("numeric-fluents");
    } else if (key == ":derived") {
      throw UnsupportedFeature("derived-predicates");
    } else if (key == ":durative-action") {
      throw UnsupportedFeature("durative-actions");
    } else {
      fail(s.items.front(), "unknown domain section '" + key + "'");
    }
  }

  void requirements(const SExpr& s) {
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      const std::string& r = expect_token(s.items[i], "requirement");
      if (r.size() < 2 || r.front() != ':') fail(s.items[i], "expected ':requirement'");
      std::string name = r.substr(1);
      if (!kSupportedRequirements.count(name)) throw UnsupportedFeature(name);
      domain_.requirements.push_back(std::move(name));
    }
  }

  void types(const SExpr& s) {
    for (auto& t : parse_typed_list(s.items, 1, false)) {
      if (t.name == kRootType) continue;
      if (domain_.is_declared_type(t.name)) {
        throw SemanticError("type '" + t.name + "' declared twice" + where(s));
      }
      domain_.types.push_back(TypeDecl{t.name, t.type});
    }
    for (const auto& t : domain_.types) {
      if (!domain_.is_declared_type(t.parent)) {
        throw SemanticError("type '" + t.name + "' has undeclared parent '" + t.parent + "'");
      }
      // Walk to the root; a cycle never reaches it.
      std::string cur = t.name;
      for (std::size_t hops = 0; cur != kRootType; ++hops) {
        if (hops > domain_.types.size()) {
          throw SemanticError("cyclic type hierarchy at '" + t.name + "'");
        }
        cur = domain_.parent_of(cur);
      }
    }
  }

  void predicates(const SExpr& s) {
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      const SExpr& p = expect_list(s.items[i], "predicate declaration");
      if (p.items.empty()) fail(p, "expected predicate name");
      PredicateDecl decl;
      decl.name = expect_name(p.items.front(), "predicate name");
      decl.params = parse_typed_list(p.items, 1, true);
      if (domain_.find_predicate(decl.name)) {
        throw SemanticError("predicate '" + decl.name + "' declared twice" + where(p));
      }
      for (const auto& param : decl.params) check_type(param.type, p);
      domain_.predicates.push_back(std::move(decl));
    }
  }

  void check_type(const std::string& type, const SExpr& at) const {
    if (!domain_.is_declared_type(type)) {
      throw SemanticError("undeclared type '" + type + "'" + where(at));
    }
  }

  void action(const SExpr& s) {
    if (s.items.size() < 2) fail(s, "expected action name");
    ActionSchema a;
    a.name = expect_name(s.items[1], "action name");
    if (domain_.find_action(a.name)) {
      throw SemanticError("action '" + a.name + "' declared twice" + where(s));
    }
    for (std::size_t i = 2; i < s.items.size(); i += 2) {
      const std::string& key = expect_token(s.items[i], "action keyword");
      if (i + 1 >= s.items.size()) fail(s.items[i], "expected value after '" + key + "'");
      const SExpr& value = s.items[i + 1];
      if (key == ":parameters") {
        a.params = parse_typed_list(expect_list(value, "parameter list").items, 0, true);
        for (const auto& p : a.params) check_type(p.type, value);
      } else if (key == ":precondition") {
        collect_literals(value, a.preconditions);
      } else if (key == ":effect") {
        std::vector<Literal> effects;
        if (value.has_head("forall")) throw UnsupportedFeature("conditional-effects");
        collect_literals(value, effects);
        for (auto& l : effects) {
          (l.positive ? a.add_effects : a.del_effects).push_back(std::move(l.atom));
        }
      } else {
        fail(s.items[i], "unknown action keyword '" + key + "'");
      }
    }
    for (const auto& l : a.preconditions) check_schema_atom(a, l.atom, s);
    for (const auto& at : a.add_effects) check_schema_atom(a, at, s);
    for (const auto& at : a.del_effects) check_schema_atom(a, at, s);
    domain_.actions.push_back(std::move(a));
  }

  void check_schema_atom(const ActionSchema& a, const Atom& atom, const SExpr& at) const {
    const PredicateDecl* decl = domain_.find_predicate(atom.predicate);
    if (!decl) {
      throw SemanticError("undeclared predicate '" + atom.predicate + "' in action '" +
                          a.name + "'" + where(at));
    }
    if (decl->params.size() != atom.args.size()) {
      throw SemanticError("arity mismatch for '" + atom.predicate + "' in action '" + a.name +
                          "': expected " + std::to_string(decl->params.size()) + ", got " +
                          std::to_string(atom.args.size()) + where(at));
    }
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      const std::string& arg = atom.args[i];
      if (arg.empty() || arg.front() != '?') {
        throw SemanticError("object '" + arg + "' used in action '" + a.name +
                            "' (domain constants are not supported)" + where(at));
      }
      auto it = std::find_if(a.params.begin(), a.params.end(),
                             [&](const TypedName& p) { return p.name == arg; });
      if (it == a.params.end()) {
        throw SemanticError("variable '" + arg + "' is not a parameter of action '" + a.name +
                            "'" + where(at));
      }
      if (!domain_.is_subtype(it->type, decl->params[i].type)) {
        throw SemanticError("variable '" + arg + "' of type '" + it->type +
                            "' does not fit argument " + std::to_string(i + 1) + " of '" +
                            atom.predicate + "' (type '" + decl->params[i].type + "')" +
                            where(at));
      }
    }
  }

  DomainDef domain_;
};

void check_ground_atom(const Atom& atom, const DomainDef& domain, const ProblemDef& problem,
                       const SExpr& at) {
  const PredicateDecl* decl = domain.find_predicate(atom.predicate);
  if (!decl) {
    throw SemanticError("undeclared predicate '" + atom.predicate + "'" + where(at));
  }
  if (decl->params.size() != atom.args.size()) {
    throw SemanticError("arity mismatch for '" + atom.predicate + "': expected " +
                        std::to_string(decl->params.size()) + ", got " +
                        std::to_string(atom.args.size()) + where(at));
  }
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const std::string type = problem.type_of(atom.args[i]);
    if (type.empty()) {
      throw SemanticError("undeclared object '" + atom.args[i] + "' in " + atom.to_string() +
                          where(at));
    }
    if (!domain.is_subtype(type, decl->params[i].type)) {
      throw SemanticError("ill-typed atom " + atom.to_string() + ": '" + atom.args[i] +
                          "' is a '" + type + "', expected '" + decl->params[i].type + "'" +
                          where(at));
    }
  }
}

GoalCond build_goal(const SExpr& e, const DomainDef& domain, const ProblemDef& problem) {
  std::vector<Literal> literals;
  collect_literals(e, literals);
  for (const auto& l : literals) check_ground_atom(l.atom, domain, problem, e);
  return GoalCond(std::move(literals));
}

}  // namespace

DomainDef parse_domain(std::string_view text) {
  return DomainBuilder().build(detail::read_single_sexpr(text, "(define (domain ...))"));
}

ProblemDef parse_problem(std::string_view text, const DomainDef& domain) {
  const SExpr root = detail::read_single_sexpr(text, "(define (problem ...))");
  expect_list(root, "(define ...)");
  if (!root.has_head("define")) fail(root, "expected 'define'");
  if (root.items.size() < 2 || !root.items[1].has_head("problem") ||
      root.items[1].items.size() != 2) {
    fail(root, "expected (problem <name>)");
  }
  ProblemDef problem;
  problem.name = expect_name(root.items[1].items[1], "problem name");

  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const SExpr& s = expect_list(root.items[i], "problem section");
    if (s.items.empty() || s.items.front().is_list) fail(s, "expected section keyword");
    const std::string& key = s.items.front().token;
    if (key == ":domain") {
      if (s.items.size() != 2) fail(s, "expected (:domain <name>)");
      problem.domain_name = expect_name(s.items[1], "domain name");
    } else if (key == ":requirements") {
      for (std::size_t k = 1; k < s.items.size(); ++k) {
        const std::string& r = expect_token(s.items[k], "requirement");
        if (r.size() < 2 || r.front() != ':') fail(s.items[k], "expected ':requirement'");
        if (!kSupportedRequirements.count(r.substr(1))) throw UnsupportedFeature(r.substr(1));
      }
    } else if (key == ":objects") {
      problem.objects = parse_typed_list(s.items, 1, false);
    } else if (key == ":init") {
      init = &s;
    } else if (key == ":goal") {
      if (s.items.size() != 2) fail(s, "expected exactly one formula in (:goal ...)");
      goal = &s;
    } else if (key == ":metric") {
      throw UnsupportedFeature("metric");
    } else {
      fail(s.items.front(), "unknown problem section '" + key + "'");
    }
  }
  if (problem.domain_name.empty()) fail(root, "expected (:domain <name>)");
  if (problem.domain_name != domain.name) {
    throw SemanticError("problem '" + problem.name + "' is for domain '" +
                        problem.domain_name + "', not '" + domain.name + "'");
  }

  std::set<std::string, std::less<>> seen;
  for (const auto& o : problem.objects) {
    if (!seen.insert(o.name).second) {
      throw SemanticError("object '" + o.name + "' declared twice");
    }
    if (!domain.is_declared_type(o.type)) {
      throw SemanticError("object '" + o.name + "' has unknown type '" + o.type + "'");
    }
  }

  if (init) {
    std::vector<Atom> atoms;
    for (std::size_t i = 1; i < init->items.size(); ++i) {
      const SExpr& e = init->items[i];
      if (e.has_head("not")) fail(e, "negative literals are not allowed in :init");
      if (e.has_head("=")) throw UnsupportedFeature("numeric-fluents");
      Atom atom = parse_atom_expr(e);
      check_ground_atom(atom, domain, problem, e);
      atoms.push_back(std::move(atom));
    }
    problem.init = State(std::move(atoms));
  }
  if (!goal) fail(root, "expected (:goal ...)");
  problem.goal = build_goal(goal->items[1], domain, problem);
  return problem;
}

GoalCond parse_goal_condition(std::string_view text, const DomainDef& domain,
                              const ProblemDef& problem) {
  return build_goal(detail::read_single_sexpr(text, "goal condition"), domain, problem);
}

std::vector<GoalCond> parse_goal_blocks(std::string_view text, const DomainDef& domain,
                                        const ProblemDef& problem) {
  std::vector<GoalCond> goals;
  for (const auto& [begin, end] : detail::find_lists_with_head(text, ":goal")) {
    const SExpr block = detail::read_single_sexpr(text.substr(begin, end - begin), "(:goal ...)");
    if (block.items.size() != 2) fail(block, "expected exactly one condition in (:goal ...)");
    goals.push_back(build_goal(block.items[1], domain, problem));
  }
  return goals;
}

}  // namespace nstp
