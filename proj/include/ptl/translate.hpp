#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ptl/condition.hpp"
#include "ptl/dialect.hpp"
#include "ptl/errors.hpp"
#include "ptl/formula.hpp"
#include "ptl/printer.hpp"
#include "ptl/rational.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"

namespace ptl {

// Second-order numeric terms: function applications over variables and
// constants, products, sums over bound variable tuples, and (for printing
// completeness) addition, logarithms, and numeric literals.
enum class STKind {
  Func,   // f(x,...)
  Mul,    // i * j
  Add,    // i + j
  Sum,    // SUM[y ...] i
  Log,    // log i
  Const,  // numeric literal
};

struct SOTerm;
using SOTermPtr = std::shared_ptr<const SOTerm>;

struct SOTerm {
  STKind kind;
  std::string func;                // Func name
  std::vector<Term> args;          // Func arguments
  std::vector<std::string> bound;  // Sum bound variables
  Rat value = 0;                   // Const
  SOTermPtr a, b;                  // children

  static SOTermPtr app(std::string name, std::vector<Term> args) {
    auto t = std::make_shared<SOTerm>();
    t->kind = STKind::Func;
    t->func = std::move(name);
    t->args = std::move(args);
    return t;
  }
  static SOTermPtr mul(SOTermPtr l, SOTermPtr r) {
    auto t = std::make_shared<SOTerm>();
    t->kind = STKind::Mul;
    t->a = std::move(l);
    t->b = std::move(r);
    return t;
  }
  static SOTermPtr add(SOTermPtr l, SOTermPtr r) {
    auto t = std::make_shared<SOTerm>();
    t->kind = STKind::Add;
    t->a = std::move(l);
    t->b = std::move(r);
    return t;
  }
  static SOTermPtr sum(std::vector<std::string> bound, SOTermPtr body) {
    auto t = std::make_shared<SOTerm>();
    t->kind = STKind::Sum;
    t->bound = std::move(bound);
    t->a = std::move(body);
    return t;
  }
  static SOTermPtr log_of(SOTermPtr body) {
    auto t = std::make_shared<SOTerm>();
    t->kind = STKind::Log;
    t->a = std::move(body);
    return t;
  }
  static SOTermPtr constant(Rat v) {
    auto t = std::make_shared<SOTerm>();
    t->kind = STKind::Const;
    t->value = std::move(v);
    return t;
  }
};

// Second-order formulas in negation normal form: numeric and first-order
// equalities and relational literals carry their own negation flag, and the
// connectives are conjunction, disjunction, first-order quantifiers, and
// function quantifiers with declared arities.
enum class SFKind {
  NumEq,      // i = j, possibly negated
  AtomEq,     // x = y, possibly negated
  Rel,        // R(x,...), possibly negated
  And,        // phi & psi
  Or,         // phi \/ psi
  ExistsVar,  // exists x. phi
  ForallVar,  // forall x. phi
  ExistsFn,   // Ef:n. phi
  ForallFn,   // Af:n. phi
};

struct SOFormula;
using SOFormulaPtr = std::shared_ptr<const SOFormula>;

struct SOFormula {
  SFKind kind;
  bool negated = false;    // NumEq / AtomEq / Rel
  SOTermPtr lhs, rhs;      // NumEq
  std::vector<Term> args;  // AtomEq sides; Rel arguments
  std::string rel;         // Rel name
  std::string var;         // quantified first-order variable
  std::string func;        // quantified function name
  std::size_t arity = 0;   // quantified function arity
  SOFormulaPtr a, b;       // children

  static SOFormulaPtr num_eq(SOTermPtr l, SOTermPtr r, bool neg) {
    auto f = std::make_shared<SOFormula>();
    f->kind = SFKind::NumEq;
    f->lhs = std::move(l);
    f->rhs = std::move(r);
    f->negated = neg;
    return f;
  }
  static SOFormulaPtr atom_eq(Term l, Term r, bool neg) {
    auto f = std::make_shared<SOFormula>();
    f->kind = SFKind::AtomEq;
    f->args = {std::move(l), std::move(r)};
    f->negated = neg;
    return f;
  }
  static SOFormulaPtr rel_atom(std::string name, std::vector<Term> args, bool neg) {
    auto f = std::make_shared<SOFormula>();
    f->kind = SFKind::Rel;
    f->rel = std::move(name);
    f->args = std::move(args);
    f->negated = neg;
    return f;
  }
  static SOFormulaPtr conj(SOFormulaPtr l, SOFormulaPtr r) {
    auto f = std::make_shared<SOFormula>();
    f->kind = SFKind::And;
    f->a = std::move(l);
    f->b = std::move(r);
    return f;
  }
  static SOFormulaPtr disj(SOFormulaPtr l, SOFormulaPtr r) {
    auto f = std::make_shared<SOFormula>();
    f->kind = SFKind::Or;
    f->a = std::move(l);
    f->b = std::move(r);
    return f;
  }
  static SOFormulaPtr quant_var(SFKind k, std::string v, SOFormulaPtr body) {
    auto f = std::make_shared<SOFormula>();
    f->kind = k;
    f->var = std::move(v);
    f->a = std::move(body);
    return f;
  }
  static SOFormulaPtr quant_fn(SFKind k, std::string name, std::size_t arity,
                               SOFormulaPtr body) {
    auto f = std::make_shared<SOFormula>();
    f->kind = k;
    f->func = std::move(name);
    f->arity = arity;
    f->a = std::move(body);
    return f;
  }
};

inline bool so_term_equal(const SOTermPtr& x, const SOTermPtr& y) {
  if (!x || !y) return !x && !y;
  if (x->kind != y->kind) return false;
  if (x->func != y->func || x->args != y->args || x->bound != y->bound)
    return false;
  if (x->value != y->value) return false;
  return so_term_equal(x->a, y->a) && so_term_equal(x->b, y->b);
}

inline bool so_equal(const SOFormulaPtr& x, const SOFormulaPtr& y) {
  if (!x || !y) return !x && !y;
  if (x->kind != y->kind || x->negated != y->negated) return false;
  if (!so_term_equal(x->lhs, y->lhs) || !so_term_equal(x->rhs, y->rhs))
    return false;
  if (x->args != y->args || x->rel != y->rel) return false;
  if (x->var != y->var || x->func != y->func || x->arity != y->arity)
    return false;
  return so_equal(x->a, y->a) && so_equal(x->b, y->b);
}

// A concrete interpretation for one function symbol: weights indexed by
// domain-element tuples, with implicit zero for absent tuples. The
// distribution flag records that the entries sum to one.
struct FunctionTable {
  std::string name;
  std::size_t arity = 0;
  std::map<Tuple, Rat> entries;
  bool distribution = false;

  Rat at(const Tuple& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? Rat(0) : it->second;
  }
};

using TableSet = std::map<std::string, FunctionTable>;

inline FunctionTable team_to_table(const WeightedTeam& X) {
  if (X.total_weight() != 1)
    fail(ErrorKind::BadInput,
         "team weights must sum to one to form a distribution table");
  FunctionTable t;
  t.name = "f";
  t.arity = X.arity();
  t.distribution = true;
  for (const auto& r : X.rows)
    if (r.weight != 0) t.entries[r.tuple] = r.weight;
  return t;
}

namespace detail {

// Term precedence levels: 0 additive context, 1 product operand, 2 primary.
inline std::string print_so_term(const SOTermPtr& t, int level) {
  auto wrap = [&](const std::string& s, int own) {
    return level > own ? "(" + s + ")" : s;
  };
  switch (t->kind) {
    case STKind::Func:
      return t->func + "(" + [&] {
        std::string s;
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          if (i) s += ",";
          s += print_term(t->args[i]);
        }
        return s;
      }() + ")";
    case STKind::Mul:
      return wrap(print_so_term(t->a, 1) + " * " + print_so_term(t->b, 2), 1);
    case STKind::Add:
      return wrap(print_so_term(t->a, 0) + " + " + print_so_term(t->b, 1), 0);
    case STKind::Sum:
      return "SUM[" + print_vars(t->bound) + "] " + print_so_term(t->a, 2);
    case STKind::Log:
      return "log " + print_so_term(t->a, 2);
    case STKind::Const:
      return rat_to_string(t->value);
  }
  return "?";
}

inline bool so_right_open(const SOFormulaPtr& f) {
  switch (f->kind) {
    case SFKind::ExistsVar:
    case SFKind::ForallVar:
    case SFKind::ExistsFn:
    case SFKind::ForallFn:
      return true;
    default:
      return false;
  }
}

// Formula precedence levels mirror the first-order printer: 0 top,
// 1 disjunction operand, 2 conjunction operand, 3 atom position.
inline std::string print_so(const SOFormulaPtr& f, int level) {
  auto wrap = [&](const std::string& s, int own) {
    return level > own ? "(" + s + ")" : s;
  };
  switch (f->kind) {
    case SFKind::NumEq:
      return print_so_term(f->lhs, 0) + (f->negated ? " != " : " = ") +
             print_so_term(f->rhs, 0);
    case SFKind::AtomEq:
      return print_term(f->args[0]) + (f->negated ? " != " : " = ") +
             print_term(f->args[1]);
    case SFKind::Rel: {
      std::string s = f->rel + "(" + print_terms(f->args) + ")";
      return f->negated ? "!" + s : s;
    }
    case SFKind::And:
      return wrap(print_so(f->a, 2) + " & " + print_so(f->b, 3), 2);
    case SFKind::Or:
      return wrap(print_so(f->a, 1) + " \\/ " + print_so(f->b, 2), 1);
    case SFKind::ExistsVar:
    case SFKind::ForallVar: {
      const char* q = f->kind == SFKind::ExistsVar ? "exists " : "forall ";
      return wrap(q + f->var + ". " + print_so(f->a, 0), 0);
    }
    case SFKind::ExistsFn:
    case SFKind::ForallFn: {
      const char* q = f->kind == SFKind::ExistsFn ? "E" : "A";
      return wrap(q + f->func + ":" + std::to_string(f->arity) + ". " +
                      print_so(f->a, 0),
                  0);
    }
  }
  return "?";
}

}  // namespace detail

inline std::string print_so_formula(const SOFormulaPtr& f) {
  return detail::print_so(f, 0);
}

inline std::string print_so_term(const SOTermPtr& t) {
  return detail::print_so_term(t, 0);
}

namespace detail {

struct SOToken {
  enum class Kind { Ident, Const, Number, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  int pos = 0;
};

class SOLexer {
public:
  explicit SOLexer(const std::string& src) : src_(src) { advance(); }

  const SOToken& peek() const { return tok_; }

  SOToken take() {
    SOToken t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void error(const std::string& message) const {
    fail(ErrorKind::Syntax, "so formula, column " +
                                std::to_string(tok_.pos + 1) + ": " + message);
  }

private:
  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9') || c == '#';
  }

  void advance() {
    while (i_ < src_.size() && (src_[i_] == ' ' || src_[i_] == '\t' ||
                                src_[i_] == '\n' || src_[i_] == '\r'))
      ++i_;
    tok_ = SOToken{};
    tok_.pos = static_cast<int>(i_);
    if (i_ >= src_.size()) return;
    char c = src_[i_];
    if (ident_start(c)) {
      std::size_t j = i_;
      while (j < src_.size() && ident_char(src_[j])) ++j;
      tok_.kind = SOToken::Kind::Ident;
      tok_.text = src_.substr(i_, j - i_);
      i_ = j;
      return;
    }
    if (c == '@') {
      std::size_t j = i_ + 1;
      while (j < src_.size() && ident_char(src_[j])) ++j;
      if (j == i_ + 1)
        fail(ErrorKind::Syntax, "so formula: '@' needs a constant name");
      tok_.kind = SOToken::Kind::Const;
      tok_.text = src_.substr(i_ + 1, j - i_ - 1);
      i_ = j;
      return;
    }
    if (c >= '0' && c <= '9') {
      std::size_t j = i_;
      while (j < src_.size() && src_[j] >= '0' && src_[j] <= '9') ++j;
      if (j < src_.size() && src_[j] == '/' && j + 1 < src_.size() &&
          src_[j + 1] >= '0' && src_[j + 1] <= '9') {
        ++j;
        while (j < src_.size() && src_[j] >= '0' && src_[j] <= '9') ++j;
      }
      tok_.kind = SOToken::Kind::Number;
      tok_.text = src_.substr(i_, j - i_);
      i_ = j;
      return;
    }
    tok_.kind = SOToken::Kind::Symbol;
    if (c == '\\' && i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
      tok_.text = "\\/";
      i_ += 2;
      return;
    }
    if (c == '!' && i_ + 1 < src_.size() && src_[i_ + 1] == '=') {
      tok_.text = "!=";
      i_ += 2;
      return;
    }
    tok_.text = std::string(1, c);
    ++i_;
  }

  const std::string& src_;
  std::size_t i_ = 0;
  SOToken tok_;
};

class SOParser {
public:
  explicit SOParser(const std::string& src) : lex_(src) {}

  SOFormulaPtr parse() {
    auto f = formula();
    if (lex_.peek().kind != SOToken::Kind::End)
      lex_.error("unexpected trailing input");
    return f;
  }

private:
  SOLexer lex_;

  bool at_symbol(const std::string& s) const {
    return lex_.peek().kind == SOToken::Kind::Symbol && lex_.peek().text == s;
  }
  bool at_ident(const std::string& s) const {
    return lex_.peek().kind == SOToken::Kind::Ident && lex_.peek().text == s;
  }
  void expect(const std::string& s) {
    if (!at_symbol(s)) lex_.error("expected '" + s + "'");
    lex_.take();
  }
  std::string ident(const std::string& what) {
    if (lex_.peek().kind != SOToken::Kind::Ident) lex_.error("expected " + what);
    return lex_.take().text;
  }

  SOFormulaPtr formula() {
    auto f = conjunction();
    while (at_symbol("\\/")) {
      lex_.take();
      f = SOFormula::disj(f, conjunction());
    }
    return f;
  }

  SOFormulaPtr conjunction() {
    auto f = atom();
    while (at_symbol("&")) {
      lex_.take();
      f = SOFormula::conj(f, atom());
    }
    return f;
  }

  // One first-order or function quantifier: `exists x.`, `forall x.`, or an
  // identifier of the form E<name>/A<name> followed by `:arity.`.
  SOFormulaPtr atom() {
    if (at_symbol("(")) {
      lex_.take();
      auto f = formula();
      expect(")");
      return f;
    }
    if (at_symbol("!")) {
      lex_.take();
      std::string name = ident("a relation name after '!'");
      expect("(");
      auto args = term_args();
      expect(")");
      return SOFormula::rel_atom(name, std::move(args), true);
    }
    if (at_ident("exists") || at_ident("forall")) {
      bool ex = lex_.take().text == "exists";
      std::string v = ident("a variable");
      expect(".");
      return SOFormula::quant_var(ex ? SFKind::ExistsVar : SFKind::ForallVar, v,
                                  formula());
    }
    if (lex_.peek().kind == SOToken::Kind::Ident && lex_.peek().text.size() > 1 &&
        (lex_.peek().text[0] == 'E' || lex_.peek().text[0] == 'A') &&
        !at_ident("SUM")) {
      SOToken t = lex_.peek();
      SOLexer probe = lex_;
      probe.take();
      if (probe.peek().kind == SOToken::Kind::Symbol && probe.peek().text == ":") {
        lex_.take();
        expect(":");
        if (lex_.peek().kind != SOToken::Kind::Number)
          lex_.error("expected a function arity");
        std::size_t arity = std::stoul(lex_.take().text);
        expect(".");
        return SOFormula::quant_fn(
            t.text[0] == 'E' ? SFKind::ExistsFn : SFKind::ForallFn,
            t.text.substr(1), arity, formula());
      }
    }
    if (at_ident("SUM") || at_ident("log") ||
        lex_.peek().kind == SOToken::Kind::Number)
      return finish_num_eq(additive());
    if (lex_.peek().kind == SOToken::Kind::Const)
      return finish_atom_eq(Term::cons(lex_.take().text));
    std::string name = ident("an atom");
    if (at_symbol("(")) {
      lex_.take();
      auto args = term_args();
      expect(")");
      auto app = SOTerm::app(name, std::move(args));
      if (at_symbol("*") || at_symbol("+") || at_symbol("=") || at_symbol("!="))
        return finish_num_eq(additive_from(multiplicative_from(app)));
      return SOFormula::rel_atom(app->func, app->args, false);
    }
    return finish_atom_eq(Term::var(name));
  }

  SOFormulaPtr finish_atom_eq(Term lhs) {
    bool neg = at_symbol("!=");
    if (!neg && !at_symbol("=")) lex_.error("expected '=' or '!='");
    lex_.take();
    Term rhs = single_term("a variable or constant");
    return SOFormula::atom_eq(std::move(lhs), std::move(rhs), neg);
  }

  SOFormulaPtr finish_num_eq(SOTermPtr lhs) {
    bool neg = at_symbol("!=");
    if (!neg && !at_symbol("=")) lex_.error("expected '=' or '!='");
    lex_.take();
    return SOFormula::num_eq(std::move(lhs), additive(), neg);
  }

  Term single_term(const std::string& what) {
    if (lex_.peek().kind == SOToken::Kind::Const)
      return Term::cons(lex_.take().text);
    if (lex_.peek().kind == SOToken::Kind::Ident)
      return Term::var(lex_.take().text);
    lex_.error("expected " + what);
  }

  std::vector<Term> term_args() {
    std::vector<Term> args;
    if (at_symbol(")")) return args;
    args.push_back(single_term("a variable or constant"));
    while (at_symbol(",")) {
      lex_.take();
      args.push_back(single_term("a variable or constant"));
    }
    return args;
  }

  SOTermPtr additive() { return additive_from(multiplicative()); }

  SOTermPtr additive_from(SOTermPtr first) {
    while (at_symbol("+")) {
      lex_.take();
      first = SOTerm::add(first, multiplicative());
    }
    return first;
  }

  SOTermPtr multiplicative() { return multiplicative_from(primary()); }

  SOTermPtr multiplicative_from(SOTermPtr first) {
    while (at_symbol("*")) {
      lex_.take();
      first = SOTerm::mul(first, primary());
    }
    return first;
  }

  SOTermPtr primary() {
    if (lex_.peek().kind == SOToken::Kind::Number)
      return SOTerm::constant(parse_rat(lex_.take().text));
    if (at_ident("SUM")) {
      lex_.take();
      expect("[");
      std::vector<std::string> bound;
      while (lex_.peek().kind == SOToken::Kind::Ident)
        bound.push_back(lex_.take().text);
      expect("]");
      return SOTerm::sum(std::move(bound), primary());
    }
    if (at_ident("log")) {
      lex_.take();
      return SOTerm::log_of(primary());
    }
    if (at_symbol("(")) {
      lex_.take();
      auto t = additive();
      expect(")");
      return t;
    }
    std::string name = ident("a numeric term");
    expect("(");
    auto args = term_args();
    expect(")");
    return SOTerm::app(std::move(name), std::move(args));
  }
};

}  // namespace detail

inline SOFormulaPtr parse_so_formula(const std::string& text) {
  return detail::SOParser(text).parse();
}

// Complements a formula while keeping negation normal form: negation flags
// flip on the atoms and the connectives and quantifiers dualize.
inline SOFormulaPtr so_negate(const SOFormulaPtr& f) {
  switch (f->kind) {
    case SFKind::NumEq:
      return SOFormula::num_eq(f->lhs, f->rhs, !f->negated);
    case SFKind::AtomEq:
      return SOFormula::atom_eq(f->args[0], f->args[1], !f->negated);
    case SFKind::Rel:
      return SOFormula::rel_atom(f->rel, f->args, !f->negated);
    case SFKind::And:
      return SOFormula::disj(so_negate(f->a), so_negate(f->b));
    case SFKind::Or:
      return SOFormula::conj(so_negate(f->a), so_negate(f->b));
    case SFKind::ExistsVar:
      return SOFormula::quant_var(SFKind::ForallVar, f->var, so_negate(f->a));
    case SFKind::ForallVar:
      return SOFormula::quant_var(SFKind::ExistsVar, f->var, so_negate(f->a));
    case SFKind::ExistsFn:
      return SOFormula::quant_fn(SFKind::ForallFn, f->func, f->arity,
                                 so_negate(f->a));
    case SFKind::ForallFn:
      return SOFormula::quant_fn(SFKind::ExistsFn, f->func, f->arity,
                                 so_negate(f->a));
  }
  fail(ErrorKind::BadInput, "unknown so formula node");
}

namespace detail {

inline std::vector<std::string> dedupe_vars(const std::vector<std::string>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

inline std::vector<std::string> minus_vars(const std::vector<std::string>& vs,
                                           const std::vector<std::string>& drop) {
  std::vector<std::string> out;
  for (const auto& v : vs)
    if (std::find(drop.begin(), drop.end(), v) == drop.end()) out.push_back(v);
  return out;
}

inline std::vector<Term> var_terms(const std::vector<std::string>& vs) {
  std::vector<Term> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(Term::var(v));
  return out;
}

// Builds the translation of one formula relative to the ambient variable
// tuple carried by the function symbol `fname`. Fresh function and variable
// names draw from a single counter so translation output is deterministic.
struct Thm3Translator {
  int counter = 0;

  std::string fresh(const char* prefix) {
    return std::string(prefix) + "#" + std::to_string(++counter);
  }

  static SOFormulaPtr forall_chain(const std::vector<std::string>& vars,
                                   SOFormulaPtr body) {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it)
      body = SOFormula::quant_var(SFKind::ForallVar, *it, std::move(body));
    return body;
  }

  // Marginal of `fname` over `keep` at the ambient tuple: the sum over the
  // remaining tuple positions, collapsing the empty sum to the bare value.
  static SOTermPtr marginal(const std::vector<std::string>& tuple,
                            const std::vector<std::string>& keep,
                            const std::string& fname) {
    auto bound = minus_vars(tuple, keep);
    auto app = SOTerm::app(fname, var_terms(tuple));
    if (bound.empty()) return app;
    return SOTerm::sum(std::move(bound), std::move(app));
  }

  SOFormulaPtr literal(const Formula& f, const std::vector<std::string>& tuple,
                       const std::string& fname) {
    SOFormulaPtr body =
        f.kind == FKind::RelAtom
            ? SOFormula::rel_atom(f.rel, f.args, f.negated)
            : SOFormula::atom_eq(f.args[0], f.args[1], f.negated);
    auto zero = SOFormula::num_eq(SOTerm::app(fname, var_terms(tuple)),
                                  SOTerm::constant(0), false);
    return forall_chain(tuple, SOFormula::disj(std::move(zero), std::move(body)));
  }

  SOFormulaPtr indep_atom(const Formula& f, const std::vector<std::string>& tuple,
                          const std::string& fname) {
    auto v0 = dedupe_vars(f.t0);
    auto v1 = minus_vars(dedupe_vars(f.t1), v0);
    auto v2 = minus_vars(dedupe_vars(f.t2), v0);
    auto as_set = [](const std::vector<std::string>& vs) {
      return std::set<std::string>(vs.begin(), vs.end());
    };
    std::vector<std::string> prefix = v0;
    prefix.insert(prefix.end(), v1.begin(), v1.end());
    if (as_set(v1) == as_set(v2)) {
      auto m01 = marginal(tuple, prefix, fname);
      auto m0 = marginal(tuple, v0, fname);
      auto zero = SOFormula::num_eq(m01, SOTerm::constant(0), false);
      auto same = SOFormula::num_eq(m01, m0, false);
      return forall_chain(prefix,
                          SOFormula::disj(std::move(zero), std::move(same)));
    }
    for (const auto& v : v2)
      if (std::find(v1.begin(), v1.end(), v) != v1.end())
        fail(ErrorKind::Unsupported,
             "independence atom sides overlap after normalization; only "
             "disjoint or identical side tuples translate");
    std::vector<std::string> keep01 = prefix;
    std::vector<std::string> keep02 = v0, keep012 = prefix;
    keep02.insert(keep02.end(), v2.begin(), v2.end());
    keep012.insert(keep012.end(), v2.begin(), v2.end());
    auto lhs = SOTerm::mul(marginal(tuple, keep01, fname),
                           marginal(tuple, keep02, fname));
    auto rhs = SOTerm::mul(marginal(tuple, keep012, fname),
                           marginal(tuple, v0, fname));
    auto body = SOFormula::num_eq(std::move(lhs), std::move(rhs), false);
    std::vector<std::string> all = prefix;
    all.insert(all.end(), v2.begin(), v2.end());
    return forall_chain(all, std::move(body));
  }

  SOFormulaPtr split_or(const Formula& f, const std::vector<std::string>& tuple,
                        const std::string& fname) {
    auto d0 = translate(f.a, tuple, fname);
    auto d1 = translate(f.b, tuple, fname);
    std::string g0 = fresh("g"), g1 = fresh("g"), g2 = fresh("g"),
                g3 = fresh("g");
    std::string x = fresh("w");
    Term l = Term::cons("zero"), r = Term::cons("one");
    std::size_t k = tuple.size();

    auto tuple_and = [&](Term extra) {
      auto args = var_terms(tuple);
      args.push_back(std::move(extra));
      return args;
    };
    auto side_zero = SOFormula::conj(
        SOFormula::num_eq(SOTerm::app(g0, {Term::var(x)}), SOTerm::constant(0),
                          false),
        SOFormula::num_eq(SOTerm::app(g3, tuple_and(Term::var(x))),
                          SOTerm::constant(0), false));
    auto only_lr = forall_chain(
        tuple, SOFormula::quant_var(
                   SFKind::ForallVar, x,
                   SOFormula::disj(
                       SOFormula::atom_eq(Term::var(x), l, false),
                       SOFormula::disj(SOFormula::atom_eq(Term::var(x), r, false),
                                       std::move(side_zero)))));
    auto scale = forall_chain(
        tuple,
        SOFormula::conj(
            SOFormula::num_eq(SOTerm::app(g3, tuple_and(l)),
                              SOTerm::mul(SOTerm::app(g1, var_terms(tuple)),
                                          SOTerm::app(g0, {l})),
                              false),
            SOFormula::num_eq(SOTerm::app(g3, tuple_and(r)),
                              SOTerm::mul(SOTerm::app(g2, var_terms(tuple)),
                                          SOTerm::app(g0, {r})),
                              false)));
    auto recombine = forall_chain(
        tuple,
        SOFormula::num_eq(SOTerm::sum({x}, SOTerm::app(g3, tuple_and(Term::var(x)))),
                          SOTerm::app(fname, var_terms(tuple)), false));
    auto b0 = translate(f.a, tuple, g1);
    auto b1 = translate(f.b, tuple, g2);
    auto inner = SOFormula::conj(
        std::move(only_lr),
        SOFormula::conj(std::move(scale),
                        SOFormula::conj(std::move(recombine),
                                        SOFormula::conj(std::move(b0),
                                                        std::move(b1)))));
    auto chain = SOFormula::quant_fn(
        SFKind::ExistsFn, g0, 1,
        SOFormula::quant_fn(
            SFKind::ExistsFn, g1, k,
            SOFormula::quant_fn(
                SFKind::ExistsFn, g2, k,
                SOFormula::quant_fn(SFKind::ExistsFn, g3, k + 1,
                                    std::move(inner)))));
    return SOFormula::disj(std::move(d0),
                           SOFormula::disj(std::move(d1), std::move(chain)));
  }

  SOFormulaPtr quantifier(const Formula& f, const std::vector<std::string>& tuple,
                          const std::string& fname) {
    const std::string& x = f.var;
    auto base = minus_vars(tuple, {x});
    auto extended = base;
    extended.push_back(x);
    std::string g = fresh("g");

    auto new_marg = SOTerm::sum({x}, SOTerm::app(g, var_terms(extended)));
    SOTermPtr old_marg = SOTerm::app(fname, var_terms(tuple));
    if (base.size() != tuple.size())
      old_marg = SOTerm::sum({x}, std::move(old_marg));
    auto keep_marg =
        SOFormula::num_eq(std::move(new_marg), std::move(old_marg), false);

    SOFormulaPtr guard;
    if (f.kind == FKind::Exists) {
      guard = forall_chain(base, std::move(keep_marg));
    } else {
      std::string y = fresh("w");
      auto second = var_terms(base);
      second.push_back(Term::var(y));
      auto slices = SOFormula::quant_var(
          SFKind::ForallVar, x,
          SOFormula::quant_var(
              SFKind::ForallVar, y,
              SOFormula::num_eq(SOTerm::app(g, var_terms(extended)),
                                SOTerm::app(g, std::move(second)), false)));
      guard = forall_chain(
          base, SOFormula::conj(std::move(slices), std::move(keep_marg)));
    }
    auto body = translate(f.a, extended, g);
    return SOFormula::quant_fn(
        SFKind::ExistsFn, g, extended.size(),
        SOFormula::conj(std::move(guard), std::move(body)));
  }

  SOFormulaPtr translate(const FormulaPtr& f, const std::vector<std::string>& tuple,
                         const std::string& fname) {
    switch (f->kind) {
      case FKind::RelAtom:
      case FKind::Eq:
        return literal(*f, tuple, fname);
      case FKind::Indep:
        return indep_atom(*f, tuple, fname);
      case FKind::Dep:
        fail(ErrorKind::Unsupported,
             "dependence atoms have no direct translation; rewrite them to "
             "independence atoms first");
      case FKind::Marg:
        fail(ErrorKind::Unsupported,
             "marginal identity atoms are outside the translated dialect");
      case FKind::EntropyEq:
        fail(ErrorKind::Unsupported,
             "entropy atoms are outside the translated dialect");
      case FKind::BoolNeg:
        return so_negate(translate(f->a, tuple, fname));
      case FKind::And:
        return SOFormula::conj(translate(f->a, tuple, fname),
                               translate(f->b, tuple, fname));
      case FKind::SplitOr:
        return split_or(*f, tuple, fname);
      case FKind::Exists:
      case FKind::Forall:
        return quantifier(*f, tuple, fname);
      default:
        fail(ErrorKind::Unsupported,
             "weight-comparison constructs have no function translation");
    }
  }
};

}  // namespace detail

inline SOFormulaPtr thm3_translate(const FormulaPtr& f) {
  auto fv = free_vars(f);
  std::vector<std::string> tuple(fv.begin(), fv.end());
  detail::Thm3Translator tr;
  return tr.translate(f, tuple, "f");
}

namespace detail {

using SOEnv = std::map<std::string, Elem>;

inline Elem so_resolve(const Structure& A, const SOEnv& env, const Term& t) {
  if (t.is_const) return A.constant(t.name);
  auto it = env.find(t.name);
  if (it == env.end())
    fail(ErrorKind::UnknownVariable, "unbound variable in so formula: " + t.name);
  return it->second;
}

inline Rat eval_so_term(const Structure& A, const TableSet& tables,
                        const SOEnv& env, const SOTermPtr& t) {
  switch (t->kind) {
    case STKind::Func: {
      auto it = tables.find(t->func);
      if (it == tables.end())
        fail(ErrorKind::BadInput, "no table for function: " + t->func);
      if (it->second.arity != t->args.size())
        fail(ErrorKind::ArityMismatch,
             "function " + t->func + " applied to " +
                 std::to_string(t->args.size()) + " arguments, table has arity " +
                 std::to_string(it->second.arity));
      Tuple key;
      key.reserve(t->args.size());
      for (const auto& a : t->args) key.push_back(so_resolve(A, env, a));
      return it->second.at(key);
    }
    case STKind::Mul:
      return eval_so_term(A, tables, env, t->a) *
             eval_so_term(A, tables, env, t->b);
    case STKind::Add:
      return eval_so_term(A, tables, env, t->a) +
             eval_so_term(A, tables, env, t->b);
    case STKind::Sum: {
      Rat total = 0;
      SOEnv local = env;
      std::vector<Elem> odo(t->bound.size(), 0);
      while (true) {
        for (std::size_t i = 0; i < odo.size(); ++i) local[t->bound[i]] = odo[i];
        total += eval_so_term(A, tables, local, t->a);
        std::size_t i = 0;
        for (; i < odo.size(); ++i) {
          if (++odo[i] < A.size()) break;
          odo[i] = 0;
        }
        if (i == odo.size()) break;
      }
      return total;
    }
    case STKind::Log:
      fail(ErrorKind::LogUnsupported,
           "logarithms cannot be evaluated in exact arithmetic");
    case STKind::Const:
      return t->value;
  }
  fail(ErrorKind::BadInput, "unknown so term node");
}

inline bool eval_so_formula(const Structure& A, const TableSet& tables,
                            SOEnv& env, const SOFormulaPtr& f) {
  switch (f->kind) {
    case SFKind::NumEq: {
      bool eq = eval_so_term(A, tables, env, f->lhs) ==
                eval_so_term(A, tables, env, f->rhs);
      return f->negated ? !eq : eq;
    }
    case SFKind::AtomEq: {
      bool eq = so_resolve(A, env, f->args[0]) == so_resolve(A, env, f->args[1]);
      return f->negated ? !eq : eq;
    }
    case SFKind::Rel: {
      const Relation& R = A.relation(f->rel);
      if (R.arity != f->args.size())
        fail(ErrorKind::ArityMismatch, "relation " + f->rel + " expects " +
                                           std::to_string(R.arity) +
                                           " arguments");
      Tuple key;
      key.reserve(f->args.size());
      for (const auto& a : f->args) key.push_back(so_resolve(A, env, a));
      bool in = R.tuples.count(key) > 0;
      return f->negated ? !in : in;
    }
    case SFKind::And:
      return eval_so_formula(A, tables, env, f->a) &&
             eval_so_formula(A, tables, env, f->b);
    case SFKind::Or:
      return eval_so_formula(A, tables, env, f->a) ||
             eval_so_formula(A, tables, env, f->b);
    case SFKind::ExistsVar:
    case SFKind::ForallVar: {
      bool ex = f->kind == SFKind::ExistsVar;
      auto saved = env.find(f->var);
      bool had = saved != env.end();
      Elem old = had ? saved->second : 0;
      for (Elem e = 0; e < A.size(); ++e) {
        env[f->var] = e;
        bool v = eval_so_formula(A, tables, env, f->a);
        if (v == ex) {
          if (had) env[f->var] = old; else env.erase(f->var);
          return ex;
        }
      }
      if (had) env[f->var] = old; else env.erase(f->var);
      return !ex;
    }
    case SFKind::ExistsFn:
    case SFKind::ForallFn:
      fail(ErrorKind::FunctionQuantifierUnsupported,
           "function quantifiers cannot be evaluated against fixed tables");
  }
  fail(ErrorKind::BadInput, "unknown so formula node");
}

}  // namespace detail

inline bool eval_so(const Structure& A, const TableSet& tables,
                    const SOFormulaPtr& f) {
  detail::SOEnv env;
  return detail::eval_so_formula(A, tables, env, f);
}

inline Rat eval_so_term(const Structure& A, const TableSet& tables,
                        const SOTermPtr& t) {
  detail::SOEnv env;
  return detail::eval_so_term(A, tables, env, t);
}

}  // namespace ptl
