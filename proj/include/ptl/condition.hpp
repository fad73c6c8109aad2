#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ptl/errors.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"

namespace ptl {

// A term in atom position: a team variable or a named structure constant.
// Constants are written with an '@' sigil in the concrete syntax and are
// resolved against the structure at evaluation time.
struct Term {
  bool is_const = false;
  std::string name;

  static Term var(std::string n) { return Term{false, std::move(n)}; }
  static Term cons(std::string n) { return Term{true, std::move(n)}; }

  bool operator==(const Term& o) const {
    return is_const == o.is_const && name == o.name;
  }
};

// Quantifier- and disjunction-free first-order condition: relational and
// equality literals closed under conjunction and negation. Conditions appear
// as the four arguments of weight-comparison atoms and as the classical
// formulas weighed by |X_phi|.
struct Cond;
using CondPtr = std::shared_ptr<const Cond>;

struct Cond {
  enum class Kind { Rel, Eq, Not, And };
  Kind kind;
  std::string rel;          // Rel
  std::vector<Term> args;   // Rel arguments; Eq uses args[0], args[1]
  CondPtr a, b;             // Not uses a; And uses a and b

  static CondPtr make_rel(std::string name, std::vector<Term> args) {
    auto c = std::make_shared<Cond>();
    c->kind = Kind::Rel;
    c->rel = std::move(name);
    c->args = std::move(args);
    return c;
  }
  static CondPtr make_eq(Term l, Term r) {
    auto c = std::make_shared<Cond>();
    c->kind = Kind::Eq;
    c->args = {std::move(l), std::move(r)};
    return c;
  }
  static CondPtr make_not(CondPtr x) {
    auto c = std::make_shared<Cond>();
    c->kind = Kind::Not;
    c->a = std::move(x);
    return c;
  }
  static CondPtr make_and(CondPtr l, CondPtr r) {
    auto c = std::make_shared<Cond>();
    c->kind = Kind::And;
    c->a = std::move(l);
    c->b = std::move(r);
    return c;
  }
};

inline void collect_cond_vars(const CondPtr& c, std::set<std::string>& out) {
  if (!c) return;
  switch (c->kind) {
    case Cond::Kind::Rel:
    case Cond::Kind::Eq:
      for (const auto& t : c->args)
        if (!t.is_const) out.insert(t.name);
      break;
    case Cond::Kind::Not:
      collect_cond_vars(c->a, out);
      break;
    case Cond::Kind::And:
      collect_cond_vars(c->a, out);
      collect_cond_vars(c->b, out);
      break;
  }
}

inline std::set<std::string> cond_vars(const CondPtr& c) {
  std::set<std::string> out;
  collect_cond_vars(c, out);
  return out;
}

// Maps team variables to columns for term evaluation against a single row.
struct VarIndex {
  const std::vector<std::string>* vars;

  explicit VarIndex(const std::vector<std::string>& v) : vars(&v) {}

  std::size_t at(const std::string& name) const {
    for (std::size_t i = 0; i < vars->size(); ++i)
      if ((*vars)[i] == name) return i;
    fail(ErrorKind::UnknownVariable, "variable not bound by team: " + name);
  }
};

inline Elem eval_term(const Structure& A, const Term& t, const Tuple& row,
                      const VarIndex& idx) {
  if (t.is_const) return A.constant(t.name);
  return row[idx.at(t.name)];
}

inline bool cond_holds(const Structure& A, const CondPtr& c, const Tuple& row,
                       const VarIndex& idx) {
  switch (c->kind) {
    case Cond::Kind::Rel: {
      const Relation& rel = A.relation(c->rel);
      if (rel.arity != c->args.size())
        fail(ErrorKind::ArityMismatch, "relation arity mismatch: " + c->rel);
      Tuple t;
      t.reserve(c->args.size());
      for (const auto& a : c->args) t.push_back(eval_term(A, a, row, idx));
      return rel.contains(t);
    }
    case Cond::Kind::Eq:
      return eval_term(A, c->args[0], row, idx) ==
             eval_term(A, c->args[1], row, idx);
    case Cond::Kind::Not:
      return !cond_holds(A, c->a, row, idx);
    case Cond::Kind::And:
      return cond_holds(A, c->a, row, idx) && cond_holds(A, c->b, row, idx);
  }
  fail(ErrorKind::BadInput, "corrupt condition node");
}

}  // namespace ptl
