#pragma once

#include <string>

#include "ptl/formula.hpp"

namespace ptl {

inline std::string print_term(const Term& t) {
  return t.is_const ? "@" + t.name : t.name;
}

namespace detail {

inline std::string print_terms(const std::vector<Term>& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) out += ", ";
    out += print_term(ts[i]);
  }
  return out;
}

inline std::string print_vars(const std::vector<std::string>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += " ";
    out += vs[i];
  }
  return out;
}

// level 1 = conjunction operand, 2 = negation operand.
inline std::string print_cond(const CondPtr& c, int level) {
  switch (c->kind) {
    case Cond::Kind::Rel:
      return c->rel + "(" + print_terms(c->args) + ")";
    case Cond::Kind::Eq:
      return print_term(c->args[0]) + " = " + print_term(c->args[1]);
    case Cond::Kind::Not:
      if (c->a->kind == Cond::Kind::Eq)
        return print_term(c->a->args[0]) + " != " + print_term(c->a->args[1]);
      if (c->a->kind == Cond::Kind::Rel || c->a->kind == Cond::Kind::Not)
        return "!" + print_cond(c->a, 2);
      return "!(" + print_cond(c->a, 0) + ")";
    case Cond::Kind::And: {
      std::string s = print_cond(c->a, 1) + " & " + print_cond(c->b, 2);
      return level >= 2 ? "(" + s + ")" : s;
    }
  }
  return "?";
}

// True when the printed form ends in an open quantifier body, so a
// following binary operator would be captured by it.
inline bool right_open(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::Exists:
    case FKind::Forall:
    case FKind::Exists1:
    case FKind::Forall1:
      return true;
    case FKind::BoolNeg:
    case FKind::DotNeg:
      return right_open(f->a);
    default:
      return false;
  }
}

// Precedence levels: 0 top, 1 disjunction operand, 2 conjunction operand,
// 3 negation operand.
inline std::string print_formula(const FormulaPtr& f, int level) {
  auto wrap = [&](const std::string& s, int own) {
    return level > own ? "(" + s + ")" : s;
  };
  switch (f->kind) {
    case FKind::RelAtom: {
      std::string s = f->rel + "(" + print_terms(f->args) + ")";
      return f->negated ? "!" + s : s;
    }
    case FKind::Eq:
      return print_term(f->args[0]) + (f->negated ? " != " : " = ") +
             print_term(f->args[1]);
    case FKind::Indep:
      return "indep(" + (f->t0.empty() ? "" : print_vars(f->t0) + " ") + "; " +
             print_vars(f->t1) + " ; " + print_vars(f->t2) + ")";
    case FKind::Dep:
      return "dep(" + print_vars(f->t0) + " ; " + print_vars(f->t1) + ")";
    case FKind::Marg:
      return "marg(" + print_vars(f->t0) + " ; " + print_vars(f->t1) + ")";
    case FKind::EntropyEq:
      return "entropy(" + print_vars(f->t0) + " ; " + print_vars(f->t1) + ")";
    case FKind::Cmp:
      return "cmp(" + print_cond(f->conds[0], 0) + " | " + print_cond(f->conds[1], 0) +
             " <= " + print_cond(f->conds[2], 0) + " | " + print_cond(f->conds[3], 0) +
             ")";
    case FKind::BoolNeg:
    case FKind::DotNeg: {
      const char* op = f->kind == FKind::BoolNeg ? "~ " : "not ";
      std::string s = op + (right_open(f->a) ? print_formula(f->a, 0)
                                             : print_formula(f->a, 3));
      return right_open(f) ? wrap(s, 0) : wrap(s, 3);
    }
    case FKind::And: {
      std::string s = print_formula(f->a, 2) + " & " + print_formula(f->b, 3);
      return wrap(s, 2);
    }
    case FKind::SplitOr:
    case FKind::GlobalOr: {
      const char* op = f->kind == FKind::SplitOr ? " \\/ " : " || ";
      std::string s = print_formula(f->a, 1) + op + print_formula(f->b, 2);
      return wrap(s, 1);
    }
    case FKind::Exists:
    case FKind::Forall:
    case FKind::Exists1:
    case FKind::Forall1: {
      const char* q = f->kind == FKind::Exists   ? "exists "
                      : f->kind == FKind::Forall ? "forall "
                      : f->kind == FKind::Exists1 ? "E1 "
                                                  : "A1 ";
      std::string s = q + f->var + ". " + print_formula(f->a, 0);
      return wrap(s, 0);
    }
  }
  return "?";
}

}  // namespace detail

inline std::string print_formula(const FormulaPtr& f) {
  return detail::print_formula(f, 0);
}

inline std::string print_condition(const CondPtr& c) {
  return detail::print_cond(c, 0);
}

}  // namespace ptl
