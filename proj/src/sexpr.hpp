#pragma once

// Minimal s-expression reader shared by the PDDL parser and the LLM output
// extractors. Internal header.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nstp::detail {

struct SExpr {
  bool is_list = false;
  std::string token;  // lower-cased; empty for lists
  std::vector<SExpr> items;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is_token(std::string_view t) const { return !is_list && token == t; }
  /// True for a list whose first item is the token `head`.
  bool has_head(std::string_view head) const {
    return is_list && !items.empty() && items.front().is_token(head);
  }
};

/// Reads every top-level expression in `text`. ';' starts a comment that
/// runs to the end of the line. Throws SyntaxError.
std::vector<SExpr> read_sexprs(std::string_view text);

/// Reads exactly one top-level expression.
SExpr read_single_sexpr(std::string_view text, std::string_view what);

/// Byte offsets [begin, end) of every balanced top-level parenthesized
/// expression whose first token equals `head` (e.g. "define", ":goal").
/// Unbalanced tails are ignored. Used to pull PDDL out of free text.
std::vector<std::pair<std::size_t, std::size_t>> find_lists_with_head(
    std::string_view text, std::string_view head);

}  // namespace nstp::detail
