#pragma once

// Shared test helpers and the independent reference implementations the
// library is checked against. The references work on plain strings and
// std::set, use only the parsed AST, and never call into strips.cpp,
// search.cpp or the validator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nstp/pddl.hpp"
#include "nstp/random.hpp"

namespace nstp::test {

inline std::filesystem::path source_dir() { return NSTP_SOURCE_DIR; }
inline std::filesystem::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }
inline std::filesystem::path corpus_dir() { return source_dir() / "tests" / "corpus"; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Naive interpreter

using NaiveState = std::set<std::string>;

inline std::string atom_text(const std::string& pred, const std::vector<std::string>& args) {
  std::string s = "(" + pred;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

struct NaiveAction {
  std::string display;
  std::vector<std::string> pos, neg, add, del;
};

inline std::vector<std::string> substitute(const std::vector<std::string>& args,
                                     const std::map<std::string, std::string>& sigma) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    auto it = sigma.find(a);
    out.push_back(it == sigma.end() ? a : it->second);
  }
  return out;
}

inline NaiveAction naive_instantiate(const ActionSchema& schema,
                                     const std::vector<std::string>& binding) {
  std::map<std::string, std::string> sigma;
  for (std::size_t i = 0; i < schema.params.size(); ++i) sigma[schema.params[i].name] = binding[i];
  NaiveAction a;
  a.display = atom_text(schema.name, binding);
  for (const auto& l : schema.preconditions) {
    (l.positive ? a.pos : a.neg).push_back(atom_text(l.atom.predicate, substitute(l.atom.args, sigma)));
  }
  for (const auto& e : schema.add_effects) a.add.push_back(atom_text(e.predicate, substitute(e.args, sigma)));
  for (const auto& e : schema.del_effects) a.del.push_back(atom_text(e.predicate, substitute(e.args, sigma)));
  return a;
}

inline bool naive_applicable(const NaiveState& s, const NaiveAction& a) {
  for (const auto& p : a.pos) {
    if (!s.count(p)) return false;
  }
  for (const auto& n : a.neg) {
    if (s.count(n)) return false;
  }
  return true;
}

// Delete first, then add.
inline NaiveState naive_apply(const NaiveState& s, const NaiveAction& a) {
  NaiveState out = s;
  for (const auto& d : a.del) out.erase(d);
  for (const auto& x : a.add) out.insert(x);
  return out;
}

inline NaiveState naive_state(const State& s) {
  NaiveState out;
  for (const auto& a : s) out.insert(atom_text(a.predicate, a.args));
  return out;
}

inline bool naive_satisfies(const NaiveState& s, const GoalCond& g) {
  for (const auto& l : g.literals()) {
    if (s.count(atom_text(l.atom.predicate, l.atom.args)) != static_cast<std::size_t>(l.positive)) {
      return false;
    }
  }
  return true;
}

// Walks the parent links by hand.
inline bool naive_is_a(const DomainDef& d, std::string type, const std::string& ancestor) {
  for (int guard = 0; guard < 64; ++guard) {
    if (type == ancestor) return true;
    if (type == "object") return false;
    std::string parent = "object";
    for (const auto& t : d.types) {
      if (t.name == type) parent = t.parent;
    }
    type = parent;
  }
  return false;
}

inline std::vector<std::string> objects_of(const DomainDef& d, const ProblemDef& p,
                                           const std::string& type) {
  std::vector<std::string> out;
  for (const auto& o : p.objects) {
    if (naive_is_a(d, o.type, type)) out.push_back(o.name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t naive_ground_count(const DomainDef& d, const ProblemDef& p) {
  std::size_t total = 0;
  for (const auto& s : d.actions) {
    std::size_t prod = 1;
    for (const auto& param : s.params) prod *= objects_of(d, p, param.type).size();
    total += prod;
  }
  return total;
}

/// All instantiations, schema order then lexicographic argument tuples.
inline std::vector<NaiveAction> naive_ground(const DomainDef& d, const ProblemDef& p) {
  std::vector<NaiveAction> out;
  for (const auto& s : d.actions) {
    std::vector<std::vector<std::string>> pools;
    for (const auto& param : s.params) pools.push_back(objects_of(d, p, param.type));
    if (std::any_of(pools.begin(), pools.end(), [](const auto& v) { return v.empty(); })) continue;
    std::vector<std::size_t> idx(pools.size(), 0);
    for (;;) {
      std::vector<std::string> binding;
      for (std::size_t i = 0; i < pools.size(); ++i) binding.push_back(pools[i][idx[i]]);
      out.push_back(naive_instantiate(s, binding));
      bool done = true;
      for (std::size_t k = pools.size(); k-- > 0;) {
        if (++idx[k] < pools[k].size()) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
      if (done) break;
    }
  }
  return out;
}

/// Every ground atom the predicates admit over the typed objects.
inline std::vector<std::string> naive_atoms(const DomainDef& d, const ProblemDef& p) {
  std::vector<std::string> out;
  for (const auto& pred : d.predicates) {
    std::vector<std::vector<std::string>> pools;
    for (const auto& param : pred.params) pools.push_back(objects_of(d, p, param.type));
    std::vector<std::vector<std::string>> tuples{{}};
    for (const auto& pool : pools) {
      std::vector<std::vector<std::string>> next;
      for (const auto& t : tuples) {
        for (const auto& o : pool) {
          auto u = t;
          u.push_back(o);
          next.push_back(std::move(u));
        }
      }
      tuples = std::move(next);
    }
    for (const auto& t : tuples) out.push_back(atom_text(pred.name, t));
  }
  return out;
}

/// Shortest plan length by exhaustive breadth-first search, or nullopt
/// when the goal is unreachable within `max_states`.
inline std::optional<std::size_t> exhaustive_bfs(const DomainDef& d, const ProblemDef& p,
                                                 std::size_t max_states = 2'000'000) {
  const auto actions = naive_ground(d, p);
  const NaiveState init = naive_state(p.init);
  if (naive_satisfies(init, p.goal)) return 0;
  std::set<NaiveState> seen{init};
  std::deque<std::pair<NaiveState, std::size_t>> queue{{init, 0}};
  while (!queue.empty()) {
    auto [s, depth] = queue.front();
    queue.pop_front();
    for (const auto& a : actions) {
      if (!naive_applicable(s, a)) continue;
      NaiveState t = naive_apply(s, a);
      if (!seen.insert(t).second) continue;
      if (naive_satisfies(t, p.goal)) return depth + 1;
      if (seen.size() > max_states) return std::nullopt;
      queue.emplace_back(std::move(t), depth + 1);
    }
  }
  return std::nullopt;
}

/// Additive relaxation by fixed-point iteration: cost(atom) = 0 in s,
/// else min over adders of 1 + sum of positive precondition costs.
inline std::int64_t fixed_point_hadd(const NaiveState& s, const GoalCond& g,
                                     const std::vector<NaiveAction>& actions) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  std::map<std::string, std::int64_t> cost;
  for (const auto& a : s) cost[a] = 0;
  auto get = [&](const std::string& a) {
    auto it = cost.find(a);
    return it == cost.end() ? kInf : it->second;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& a : actions) {
      std::int64_t c = 1;
      for (const auto& p : a.pos) {
        const auto pc = get(p);
        if (pc == kInf) {
          c = kInf;
          break;
        }
        c += pc;
      }
      if (c == kInf) continue;
      for (const auto& x : a.add) {
        if (c < get(x)) {
          cost[x] = c;
          changed = true;
        }
      }
    }
  }
  std::int64_t h = 0;
  for (const auto& l : g.literals()) {
    if (!l.positive) continue;
    const auto c = get(atom_text(l.atom.predicate, l.atom.args));
    if (c == kInf) return kInf;
    h += c;
  }
  return h;
}

/// "(p a b)" back into an Atom.
inline Atom parse_atom_text(const std::string& text) {
  std::istringstream in(text.substr(1, text.size() - 2));
  Atom a;
  in >> a.predicate;
  for (std::string arg; in >> arg;) a.args.push_back(arg);
  return a;
}

inline State to_state(const NaiveState& s) {
  std::vector<Atom> atoms;
  for (const auto& t : s) atoms.push_back(parse_atom_text(t));
  return State(std::move(atoms));
}

struct RandomPair {
  NaiveState state;
  std::size_t action = 0;  // into naive_ground order
};

/// Mixed sample: half the states come from random walks from init, half
/// are random atom subsets; half the actions are drawn among the
/// applicable ones.
inline std::vector<RandomPair> random_pairs(const DomainDef& d, const ProblemDef& p,
                                            const std::vector<NaiveAction>& actions,
                                            std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const auto atoms = naive_atoms(d, p);
  std::vector<RandomPair> out;
  while (out.size() < count) {
    NaiveState s;
    if (rng.below(2) == 0) {
      s = naive_state(p.init);
      const std::size_t steps = rng.below(25);
      for (std::size_t k = 0; k < steps; ++k) {
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < actions.size(); ++i) {
          if (naive_applicable(s, actions[i])) ok.push_back(i);
        }
        if (ok.empty()) break;
        s = naive_apply(s, actions[ok[rng.below(ok.size())]]);
      }
    } else {
      for (const auto& a : atoms) {
        if (rng.below(10) < 3) s.insert(a);
      }
    }
    std::size_t pick = rng.below(actions.size());
    if (rng.below(2) == 0) {
      std::vector<std::size_t> ok;
      for (std::size_t i = 0; i < actions.size(); ++i) {
        if (naive_applicable(s, actions[i])) ok.push_back(i);
      }
      if (!ok.empty()) pick = ok[rng.below(ok.size())];
    }
    out.push_back(RandomPair{std::move(s), pick});
  }
  return out;
}

// Independent recomputation from the raw cassette: every token is charged
// to the line holding its first character; lines with an action keep
// their sum.
inline std::vector<std::vector<double>> cassette_line_sums(const nlohmann::json& body) {
  std::vector<std::vector<double>> out;
  for (const auto& choice : body.at("choices")) {
    const std::string text = choice.at("message").at("content");
    std::vector<std::size_t> line_of(text.size() + 1, 0);
    std::size_t line = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      line_of[i] = line;
      if (text[i] == '\n') ++line;
    }
    std::vector<double> sums(line + 1, 0.0);
    std::size_t offset = 0;
    for (const auto& tok : choice.at("logprobs").at("content")) {
      sums[line_of[offset]] += tok.at("logprob").get<double>();
      offset += tok.at("token").get<std::string>().size();
    }
    std::vector<double> kept;
    std::size_t start = 0;
    for (std::size_t l = 0; l <= line; ++l) {
      const std::size_t end = std::min(text.find('\n', start), text.size());
      if (text.substr(start, end - start).find('(') != std::string::npos) kept.push_back(sums[l]);
      start = end + 1;
    }
    out.push_back(kept);
  }
  return out;
}

}  // namespace nstp::test
