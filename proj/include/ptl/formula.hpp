#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ptl/condition.hpp"
#include "ptl/errors.hpp"

namespace ptl {

struct SourcePos {
  int line = 0;
  int col = 0;
};

enum class FKind {
  RelAtom,    // R(t,...) possibly negated
  Eq,         // t = t possibly negated
  Indep,      // indep(cond ; left ; right)
  Dep,        // dep(lhs ; rhs)
  Marg,       // marg(lhs ; rhs)
  EntropyEq,  // entropy(lhs ; rhs)
  Cmp,        // cmp(d0 | d1 <= d2 | d3)
  BoolNeg,    // ~ phi
  DotNeg,     // not phi
  And,        // phi & psi
  SplitOr,    // phi \/ psi
  GlobalOr,   // phi || psi
  Exists,     // exists x. phi
  Forall,     // forall x. phi
  Exists1,    // E1 x. phi
  Forall1,    // A1 x. phi
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  FKind kind;
  SourcePos pos;

  std::string rel;                      // RelAtom
  std::vector<Term> args;               // RelAtom args; Eq sides
  bool negated = false;                 // literal negation on RelAtom/Eq
  std::vector<std::string> t0, t1, t2;  // variable tuples of team atoms
  std::array<CondPtr, 4> conds{};       // Cmp arguments
  std::string var;                      // quantified variable
  FormulaPtr a, b;                      // children

  static FormulaPtr rel_atom(std::string name, std::vector<Term> args, bool neg) {
    auto f = std::make_shared<Formula>();
    f->kind = FKind::RelAtom;
    f->rel = std::move(name);
    f->args = std::move(args);
    f->negated = neg;
    return f;
  }

  static FormulaPtr eq(Term l, Term r, bool neg) {
    auto f = std::make_shared<Formula>();
    f->kind = FKind::Eq;
    f->args = {std::move(l), std::move(r)};
    f->negated = neg;
    return f;
  }

  static FormulaPtr indep(std::vector<std::string> cond, std::vector<std::string> left,
                          std::vector<std::string> right) {
    if (left.empty() || right.empty())
      fail(ErrorKind::BadInput, "independence atom needs nonempty side tuples");
    auto f = std::make_shared<Formula>();
    f->kind = FKind::Indep;
    f->t0 = std::move(cond);
    f->t1 = std::move(left);
    f->t2 = std::move(right);
    return f;
  }

  static FormulaPtr dep(std::vector<std::string> lhs, std::vector<std::string> rhs) {
    if (lhs.empty() || rhs.empty())
      fail(ErrorKind::BadInput, "dependence atom needs nonempty tuples");
    auto f = std::make_shared<Formula>();
    f->kind = FKind::Dep;
    f->t0 = std::move(lhs);
    f->t1 = std::move(rhs);
    return f;
  }

  static FormulaPtr marg(std::vector<std::string> lhs, std::vector<std::string> rhs) {
    if (lhs.empty() || rhs.empty())
      fail(ErrorKind::BadInput, "marginal identity atom needs nonempty tuples");
    if (lhs.size() != rhs.size())
      fail(ErrorKind::ArityMismatch,
           "marginal identity atom needs tuples of equal length");
    auto f = std::make_shared<Formula>();
    f->kind = FKind::Marg;
    f->t0 = std::move(lhs);
    f->t1 = std::move(rhs);
    return f;
  }

  static FormulaPtr entropy_eq(std::vector<std::string> lhs,
                               std::vector<std::string> rhs) {
    if (lhs.empty() || rhs.empty())
      fail(ErrorKind::BadInput, "entropy atom needs nonempty tuples");
    auto f = std::make_shared<Formula>();
    f->kind = FKind::EntropyEq;
    f->t0 = std::move(lhs);
    f->t1 = std::move(rhs);
    return f;
  }

  static FormulaPtr cmp(CondPtr d0, CondPtr d1, CondPtr d2, CondPtr d3) {
    auto f = std::make_shared<Formula>();
    f->kind = FKind::Cmp;
    f->conds = {std::move(d0), std::move(d1), std::move(d2), std::move(d3)};
    return f;
  }

  static FormulaPtr unary(FKind k, FormulaPtr x) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    f->a = std::move(x);
    return f;
  }

  static FormulaPtr binary(FKind k, FormulaPtr l, FormulaPtr r) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    f->a = std::move(l);
    f->b = std::move(r);
    return f;
  }

  static FormulaPtr quant(FKind k, std::string v, FormulaPtr body) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    f->var = std::move(v);
    f->a = std::move(body);
    return f;
  }
};

inline bool cond_equal(const CondPtr& x, const CondPtr& y) {
  if (!x || !y) return !x && !y;
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case Cond::Kind::Rel:
      return x->rel == y->rel && x->args == y->args;
    case Cond::Kind::Eq:
      return x->args == y->args;
    case Cond::Kind::Not:
      return cond_equal(x->a, y->a);
    case Cond::Kind::And:
      return cond_equal(x->a, y->a) && cond_equal(x->b, y->b);
  }
  return false;
}

// Structural equality, ignoring source positions.
inline bool formula_equal(const FormulaPtr& x, const FormulaPtr& y) {
  if (!x || !y) return !x && !y;
  if (x->kind != y->kind) return false;
  if (x->rel != y->rel || x->args != y->args || x->negated != y->negated)
    return false;
  if (x->t0 != y->t0 || x->t1 != y->t1 || x->t2 != y->t2) return false;
  for (int i = 0; i < 4; ++i)
    if (!cond_equal(x->conds[i], y->conds[i])) return false;
  if (x->var != y->var) return false;
  return formula_equal(x->a, y->a) && formula_equal(x->b, y->b);
}

}  // namespace ptl
