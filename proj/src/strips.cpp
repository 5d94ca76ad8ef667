#include "nstp/strips.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>

#include "nstp/error.hpp"

namespace nstp {

namespace {

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

Atom substitute(const Atom& atom, const std::vector<TypedName>& params,
                const std::vector<std::string>& binding) {
  Atom out{atom.predicate, {}};
  out.args.reserve(atom.args.size());
  for (const auto& arg : atom.args) {
    auto it = std::find_if(params.begin(), params.end(),
                           [&](const TypedName& p) { return p.name == arg; });
    out.args.push_back(it == params.end() ? arg : binding[static_cast<std::size_t>(it - params.begin())]);
  }
  return out;
}

}  // namespace

std::string GroundAction::display_form() const {
  std::string out = "(" + name;
  for (const auto& a : args) {
    out += ' ';
    out += a;
  }
  out += ')';
  return out;
}

bool applicable(const State& s, const GroundAction& a) {
  return std::all_of(a.pre.begin(), a.pre.end(), [&](const Literal& l) {
    return s.contains(l.atom) == l.positive;
  });
}

State apply(const State& s, const GroundAction& a) {
  if (!applicable(s, a)) {
    throw NotApplicable(a.display_form() + " is not applicable");
  }
  std::vector<Atom> kept;
  kept.reserve(s.size() + a.add.size());
  std::set_difference(s.begin(), s.end(), a.del.begin(), a.del.end(), std::back_inserter(kept));
  std::vector<Atom> next;
  next.reserve(kept.size() + a.add.size());
  std::set_union(kept.begin(), kept.end(), a.add.begin(), a.add.end(), std::back_inserter(next));
  return State(std::move(next));
}

bool satisfies(const State& s, const GoalCond& g) {
  return std::all_of(g.literals().begin(), g.literals().end(), [&](const Literal& l) {
    return s.contains(l.atom) == l.positive;
  });
}

StateKey state_key(const State& s) {
  std::string text;
  for (const auto& atom : s) text += atom.to_string();
  return StateKey(std::move(text));
}

GroundAction instantiate(const ActionSchema& schema, const std::vector<std::string>& binding) {
  GroundAction g;
  g.name = schema.name;
  g.args = binding;
  for (const auto& l : schema.preconditions) {
    g.pre.push_back(Literal{substitute(l.atom, schema.params, binding), l.positive});
  }
  for (const auto& a : schema.add_effects) g.add.push_back(substitute(a, schema.params, binding));
  for (const auto& a : schema.del_effects) g.del.push_back(substitute(a, schema.params, binding));
  sort_unique(g.pre);
  sort_unique(g.add);
  sort_unique(g.del);
  std::vector<Atom> del;
  std::set_difference(g.del.begin(), g.del.end(), g.add.begin(), g.add.end(),
                      std::back_inserter(del));
  g.del = std::move(del);
  return g;
}

std::vector<GroundAction> ground_actions(const DomainDef& domain, const ProblemDef& problem) {
  std::vector<std::string> sorted_objects;
  for (const auto& o : problem.objects) sorted_objects.push_back(o.name);
  std::sort(sorted_objects.begin(), sorted_objects.end());

  std::vector<GroundAction> out;
  for (const auto& schema : domain.actions) {
    std::vector<std::vector<std::string>> domains;
    bool empty = false;
    for (const auto& p : schema.params) {
      std::vector<std::string> candidates;
      for (const auto& name : sorted_objects) {
        if (domain.is_subtype(problem.type_of(name), p.type)) candidates.push_back(name);
      }
      empty = empty || candidates.empty();
      domains.push_back(std::move(candidates));
    }
    if (empty) continue;
    // Odometer over the parameter domains, last parameter fastest.
    std::vector<std::size_t> idx(domains.size(), 0);
    std::vector<std::string> binding(domains.size());
    for (;;) {
      for (std::size_t i = 0; i < domains.size(); ++i) binding[i] = domains[i][idx[i]];
      out.push_back(instantiate(schema, binding));
      bool wrapped = true;
      for (std::size_t pos = domains.size(); pos-- > 0;) {
        if (++idx[pos] < domains[pos].size()) {
          wrapped = false;
          break;
        }
        idx[pos] = 0;
      }
      if (wrapped) break;
    }
  }
  return out;
}

std::optional<std::vector<std::string>> split_display_form(std::string_view text) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip();
  if (i >= text.size() || text[i] != '(') return std::nullopt;
  ++i;
  std::vector<std::string> tokens;
  for (;;) {
    skip();
    if (i >= text.size()) return std::nullopt;
    if (text[i] == ')') {
      ++i;
      break;
    }
    if (text[i] == '(') return std::nullopt;
    const std::size_t start = i;
    while (i < text.size() && text[i] != '(' && text[i] != ')' &&
           !std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    tokens.push_back(normalize_identifier(text.substr(start, i - start)));
  }
  skip();
  if (i != text.size() || tokens.empty()) return std::nullopt;
  return tokens;
}

Grounding::Grounding(std::shared_ptr<const DomainDef> domain, const ProblemDef& problem)
    : domain_(std::move(domain)), actions_(ground_actions(*domain_, problem)) {
  by_display_.reserve(actions_.size());
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    by_display_.emplace(actions_[i].display_form(), i);
  }
}

std::optional<std::size_t> Grounding::resolve(std::string_view display_form) const {
  auto tokens = split_display_form(display_form);
  if (!tokens) return std::nullopt;
  std::string key = "(";
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    if (i) key += ' ';
    key += (*tokens)[i];
  }
  key += ')';
  auto it = by_display_.find(key);
  if (it == by_display_.end()) return std::nullopt;
  return it->second;
}


std::optional<GroundAction> resolve_ground_action(const DomainDef& domain,
                                                  const ProblemDef& problem,
                                                  std::string_view display_form) {
  auto tokens = split_display_form(display_form);
  if (!tokens) return std::nullopt;
  const ActionSchema* schema = domain.find_action(tokens->front());
  if (!schema || schema->params.size() + 1 != tokens->size()) return std::nullopt;
  std::vector<std::string> binding(tokens->begin() + 1, tokens->end());
  for (std::size_t i = 0; i < binding.size(); ++i) {
    const std::string type = problem.type_of(binding[i]);
    if (type.empty() || !domain.is_subtype(type, schema->params[i].type)) return std::nullopt;
  }
  return instantiate(*schema, binding);
}

}  // namespace nstp
