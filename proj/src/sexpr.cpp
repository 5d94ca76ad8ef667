#include "sexpr.hpp"

#include <cctype>

#include "nstp/error.hpp"
#include "nstp/pddl.hpp"

namespace nstp::detail {

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_space();
    while (pos_ < text_.size()) {
      out.push_back(read_one());
      skip_space();
    }
    return out;
  }

 private:
  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ';' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read_one() {
    SExpr node;
    node.line = line_;
    node.column = col_;
    const char c = text_[pos_];
    if (c == ')') {
      throw SyntaxError(line_, col_, "unexpected ')'");
    }
    if (c == '(') {
      node.is_list = true;
      advance();
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) {
          throw SyntaxError(line_, col_,
                            "expected ')' to close list opened at line " +
                                std::to_string(node.line) + ", column " +
                                std::to_string(node.column));
        }
        if (text_[pos_] == ')') {
          advance();
          return node;
        }
        node.items.push_back(read_one());
      }
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) advance();
    node.token = normalize_identifier(text_.substr(start, pos_ - start));
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

std::vector<SExpr> read_sexprs(std::string_view text) {
  return Reader(text).read_all();
}

SExpr read_single_sexpr(std::string_view text, std::string_view what) {
  auto all = read_sexprs(text);
  if (all.empty()) {
    throw SyntaxError(1, 1, "expected " + std::string(what) + ", found end of input");
  }
  if (all.size() > 1) {
    throw SyntaxError(all[1].line, all[1].column,
                      "expected end of input after " + std::string(what));
  }
  return std::move(all.front());
}

std::vector<std::pair<std::size_t, std::size_t>> find_lists_with_head(
    std::string_view text, std::string_view head) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '(') {
      ++i;
      continue;
    }
    // Read the first token after '('.
    std::size_t j = i + 1;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t k = j;
    while (k < text.size() && text[k] != '(' && text[k] != ')' &&
           !std::isspace(static_cast<unsigned char>(text[k]))) {
      ++k;
    }
    if (normalize_identifier(text.substr(j, k - j)) != head) {
      ++i;
      continue;
    }
    int depth = 0;
    std::size_t end = i;
    bool closed = false;
    for (; end < text.size(); ++end) {
      if (text[end] == ';') {
        while (end < text.size() && text[end] != '\n') ++end;
        continue;
      }
      if (text[end] == '(') ++depth;
      if (text[end] == ')' && --depth == 0) {
        closed = true;
        break;
      }
    }
    if (!closed) break;
    out.emplace_back(i, end + 1);
    i = end + 1;
  }
  return out;
}

}  // namespace nstp::detail
