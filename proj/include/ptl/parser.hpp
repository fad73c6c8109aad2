#pragma once

#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "ptl/condition.hpp"
#include "ptl/errors.hpp"
#include "ptl/formula.hpp"

namespace ptl {

namespace lex {

enum class Tok {
  Ident, Const, LParen, RParen, Comma, Semi, Dot, Amp, SplitOr, GlobalOr,
  Pipe, Tilde, Bang, Eq, Neq, Leq, End,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto pos = [&]() { return SourcePos{line, col}; };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    SourcePos p = pos();
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      out.push_back({Tok::Ident, text.substr(i, j - i), p});
      advance(j - i);
      continue;
    }
    if (c == '@') {
      std::size_t j = i + 1;
      if (j >= text.size() || !ident_start(text[j]))
        fail(ErrorKind::Syntax, "expected constant name after '@' at line " +
                                    std::to_string(p.line) + ":" + std::to_string(p.col));
      while (j < text.size() && ident_char(text[j])) ++j;
      out.push_back({Tok::Const, text.substr(i + 1, j - i - 1), p});
      advance(j - i);
      continue;
    }
    auto two = text.substr(i, 2);
    if (two == "\\/") { out.push_back({Tok::SplitOr, two, p}); advance(2); continue; }
    if (two == "||") { out.push_back({Tok::GlobalOr, two, p}); advance(2); continue; }
    if (two == "!=") { out.push_back({Tok::Neq, two, p}); advance(2); continue; }
    if (two == "<=") { out.push_back({Tok::Leq, two, p}); advance(2); continue; }
    switch (c) {
      case '(': out.push_back({Tok::LParen, "(", p}); advance(1); continue;
      case ')': out.push_back({Tok::RParen, ")", p}); advance(1); continue;
      case ',': out.push_back({Tok::Comma, ",", p}); advance(1); continue;
      case ';': out.push_back({Tok::Semi, ";", p}); advance(1); continue;
      case '.': out.push_back({Tok::Dot, ".", p}); advance(1); continue;
      case '&': out.push_back({Tok::Amp, "&", p}); advance(1); continue;
      case '|': out.push_back({Tok::Pipe, "|", p}); advance(1); continue;
      case '~': out.push_back({Tok::Tilde, "~", p}); advance(1); continue;
      case '!': out.push_back({Tok::Bang, "!", p}); advance(1); continue;
      case '=': out.push_back({Tok::Eq, "=", p}); advance(1); continue;
      default:
        fail(ErrorKind::Syntax, std::string("unexpected character '") + c +
                                    "' at line " + std::to_string(p.line) + ":" +
                                    std::to_string(p.col));
    }
  }
  out.push_back({Tok::End, "", pos()});
  return out;
}

}  // namespace lex

namespace detail {

inline const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {"exists", "forall", "E1", "A1",
                                           "not",    "indep",  "dep", "marg",
                                           "entropy", "cmp"};
  return kw;
}

class Parser {
public:
  explicit Parser(const std::string& text) : toks_(lex::tokenize(text)) {}

  FormulaPtr parse_formula_all() {
    FormulaPtr f = formula();
    expect(lex::Tok::End, "end of input");
    return f;
  }

  CondPtr parse_condition_all() {
    CondPtr c = condition();
    expect(lex::Tok::End, "end of input");
    return c;
  }

private:
  std::vector<lex::Token> toks_;
  std::size_t at_ = 0;

  const lex::Token& cur() const { return toks_[at_]; }
  const lex::Token& peek(std::size_t n = 1) const {
    return toks_[std::min(at_ + n, toks_.size() - 1)];
  }
  lex::Token take() { return toks_[at_++]; }

  [[noreturn]] void err(const std::string& what) const {
    const auto& t = cur();
    fail(ErrorKind::Syntax, what + " at line " + std::to_string(t.pos.line) + ":" +
                                std::to_string(t.pos.col) +
                                (t.kind == lex::Tok::End ? " (end of input)"
                                                         : " near '" + t.text + "'"));
  }

  void expect(lex::Tok k, const std::string& what) {
    if (cur().kind != k) err("expected " + what);
    take();
  }

  bool at_ident(const char* word) const {
    return cur().kind == lex::Tok::Ident && cur().text == word;
  }

  std::string take_var() {
    if (cur().kind != lex::Tok::Ident) err("expected a variable name");
    if (detail::keywords().count(cur().text))
      err("keyword '" + cur().text + "' cannot be used as a variable");
    return take().text;
  }

  Term term() {
    if (cur().kind == lex::Tok::Const) return Term::cons(take().text);
    return Term::var(take_var());
  }

  // formula := quantifier chain over disjunction level
  FormulaPtr formula() {
    SourcePos p = cur().pos;
    if (at_ident("exists") || at_ident("forall") || at_ident("E1") || at_ident("A1")) {
      FKind k = at_ident("exists")   ? FKind::Exists
                : at_ident("forall") ? FKind::Forall
                : at_ident("E1")     ? FKind::Exists1
                                     : FKind::Forall1;
      take();
      std::string v = take_var();
      expect(lex::Tok::Dot, "'.' after quantified variable");
      auto f = Formula::quant(k, std::move(v), formula());
      const_cast<Formula&>(*f).pos = p;
      return f;
    }
    return disjunction();
  }

  FormulaPtr disjunction() {
    FormulaPtr f = conjunction();
    while (cur().kind == lex::Tok::SplitOr || cur().kind == lex::Tok::GlobalOr) {
      SourcePos p = cur().pos;
      FKind k = take().kind == lex::Tok::SplitOr ? FKind::SplitOr : FKind::GlobalOr;
      auto g = Formula::binary(k, f, conjunction());
      const_cast<Formula&>(*g).pos = p;
      f = g;
    }
    return f;
  }

  FormulaPtr conjunction() {
    FormulaPtr f = negation();
    while (cur().kind == lex::Tok::Amp) {
      SourcePos p = take().pos;
      auto g = Formula::binary(FKind::And, f, negation());
      const_cast<Formula&>(*g).pos = p;
      f = g;
    }
    return f;
  }

  // Boolean and dot negation accept a quantified phrase directly, so
  // "~ exists x. phi" negates the whole quantified formula.
  FormulaPtr negation() {
    SourcePos p = cur().pos;
    if (cur().kind == lex::Tok::Tilde || at_ident("not")) {
      FKind k = cur().kind == lex::Tok::Tilde ? FKind::BoolNeg : FKind::DotNeg;
      take();
      FormulaPtr body;
      if (at_ident("exists") || at_ident("forall") || at_ident("E1") || at_ident("A1"))
        body = formula();
      else
        body = negation();
      auto f = Formula::unary(k, std::move(body));
      const_cast<Formula&>(*f).pos = p;
      return f;
    }
    if (cur().kind == lex::Tok::Bang) {
      take();
      FormulaPtr atom = primary();
      if (atom->kind != FKind::RelAtom && atom->kind != FKind::Eq)
        fail(ErrorKind::Syntax,
             "'!' only negates relational or equality atoms (line " +
                 std::to_string(p.line) + ":" + std::to_string(p.col) + ")");
      if (atom->negated) err("double '!' on a literal");
      auto f = std::make_shared<Formula>(*atom);
      f->negated = true;
      f->pos = p;
      return f;
    }
    return primary();
  }

  FormulaPtr primary() {
    SourcePos p = cur().pos;
    if (cur().kind == lex::Tok::LParen) {
      take();
      FormulaPtr f = formula();
      expect(lex::Tok::RParen, "')'");
      return f;
    }
    if (cur().kind == lex::Tok::Const ||
        (cur().kind == lex::Tok::Ident && peek().kind != lex::Tok::LParen)) {
      Term l = term();
      return finish_equality(std::move(l), p);
    }
    if (cur().kind != lex::Tok::Ident) err("expected an atom");
    std::string head = cur().text;
    if (head == "indep") return indep_atom(p);
    if (head == "dep") return pair_atom(FKind::Dep, p);
    if (head == "marg") return pair_atom(FKind::Marg, p);
    if (head == "entropy") return pair_atom(FKind::EntropyEq, p);
    if (head == "cmp") return cmp_atom(p);
    if (detail::keywords().count(head)) err("unexpected keyword '" + head + "'");
    take();
    expect(lex::Tok::LParen, "'(' after relation name");
    std::vector<Term> args;
    if (cur().kind != lex::Tok::RParen) {
      args.push_back(term());
      while (cur().kind == lex::Tok::Comma) {
        take();
        args.push_back(term());
      }
    }
    expect(lex::Tok::RParen, "')'");
    auto f = Formula::rel_atom(std::move(head), std::move(args), false);
    const_cast<Formula&>(*f).pos = p;
    return f;
  }

  FormulaPtr finish_equality(Term l, SourcePos p) {
    bool neg;
    if (cur().kind == lex::Tok::Eq)
      neg = false;
    else if (cur().kind == lex::Tok::Neq)
      neg = true;
    else
      err("expected '=' or '!=' after term");
    take();
    Term r = term();
    auto f = Formula::eq(std::move(l), std::move(r), neg);
    const_cast<Formula&>(*f).pos = p;
    return f;
  }

  std::vector<std::string> var_list() {
    std::vector<std::string> vs;
    while (cur().kind == lex::Tok::Ident && !detail::keywords().count(cur().text))
      vs.push_back(take().text);
    return vs;
  }

  FormulaPtr indep_atom(SourcePos p) {
    take();
    expect(lex::Tok::LParen, "'('");
    auto cond = var_list();
    expect(lex::Tok::Semi, "';'");
    auto left = var_list();
    expect(lex::Tok::Semi, "';'");
    auto right = var_list();
    expect(lex::Tok::RParen, "')'");
    if (left.empty() || right.empty())
      fail(ErrorKind::Syntax, "independence atom needs nonempty side tuples (line " +
                                  std::to_string(p.line) + ")");
    auto f = Formula::indep(std::move(cond), std::move(left), std::move(right));
    const_cast<Formula&>(*f).pos = p;
    return f;
  }

  FormulaPtr pair_atom(FKind k, SourcePos p) {
    std::string head = take().text;
    expect(lex::Tok::LParen, "'('");
    auto lhs = var_list();
    expect(lex::Tok::Semi, "';'");
    auto rhs = var_list();
    expect(lex::Tok::RParen, "')'");
    if (lhs.empty() || rhs.empty())
      fail(ErrorKind::Syntax, head + " atom needs nonempty tuples (line " +
                                  std::to_string(p.line) + ")");
    if (k == FKind::Marg && lhs.size() != rhs.size())
      fail(ErrorKind::Syntax, "marg atom needs tuples of equal length (line " +
                                  std::to_string(p.line) + ")");
    FormulaPtr f;
    if (k == FKind::Dep) f = Formula::dep(std::move(lhs), std::move(rhs));
    else if (k == FKind::Marg) f = Formula::marg(std::move(lhs), std::move(rhs));
    else f = Formula::entropy_eq(std::move(lhs), std::move(rhs));
    const_cast<Formula&>(*f).pos = p;
    return f;
  }

  FormulaPtr cmp_atom(SourcePos p) {
    take();
    expect(lex::Tok::LParen, "'('");
    CondPtr d0 = condition();
    expect(lex::Tok::Pipe, "'|'");
    CondPtr d1 = condition();
    expect(lex::Tok::Leq, "'<='");
    CondPtr d2 = condition();
    expect(lex::Tok::Pipe, "'|'");
    CondPtr d3 = condition();
    expect(lex::Tok::RParen, "')'");
    auto f = Formula::cmp(std::move(d0), std::move(d1), std::move(d2), std::move(d3));
    const_cast<Formula&>(*f).pos = p;
    return f;
  }

  // Conditions: quantifier- and disjunction-free, with unrestricted '!'.
  CondPtr condition() {
    CondPtr c = cond_unary();
    while (cur().kind == lex::Tok::Amp) {
      take();
      c = Cond::make_and(c, cond_unary());
    }
    return c;
  }

  CondPtr cond_unary() {
    if (cur().kind == lex::Tok::Bang) {
      take();
      return Cond::make_not(cond_unary());
    }
    return cond_primary();
  }

  CondPtr cond_primary() {
    if (cur().kind == lex::Tok::LParen) {
      take();
      CondPtr c = condition();
      expect(lex::Tok::RParen, "')'");
      return c;
    }
    if (cur().kind == lex::Tok::Const ||
        (cur().kind == lex::Tok::Ident && peek().kind != lex::Tok::LParen)) {
      Term l = term();
      if (cur().kind == lex::Tok::Eq) {
        take();
        return Cond::make_eq(std::move(l), term());
      }
      if (cur().kind == lex::Tok::Neq) {
        take();
        return Cond::make_not(Cond::make_eq(std::move(l), term()));
      }
      err("expected '=' or '!=' in condition");
    }
    if (cur().kind != lex::Tok::Ident || detail::keywords().count(cur().text))
      err("expected a condition atom");
    std::string head = take().text;
    expect(lex::Tok::LParen, "'(' after relation name");
    std::vector<Term> args;
    if (cur().kind != lex::Tok::RParen) {
      args.push_back(term());
      while (cur().kind == lex::Tok::Comma) {
        take();
        args.push_back(term());
      }
    }
    expect(lex::Tok::RParen, "')'");
    return Cond::make_rel(std::move(head), std::move(args));
  }
};

}  // namespace detail

inline FormulaPtr parse_formula(const std::string& text) {
  return detail::Parser(text).parse_formula_all();
}

inline CondPtr parse_condition(const std::string& text) {
  return detail::Parser(text).parse_condition_all();
}

}  // namespace ptl
