#pragma once

#include <set>
#include <string>

#include "ptl/errors.hpp"
#include "ptl/formula.hpp"

namespace ptl {

// Least dialect containing a formula. FO is classical first-order logic with
// split disjunction; FO_ATOMS adds the team atoms; FO_ATOMS_NEG adds Boolean
// negation; FOPT is the weight-comparison dialect with its own connectives.
enum class Dialect { FO, FO_ATOMS, FO_ATOMS_NEG, FOPT };

inline const char* dialect_name(Dialect d) {
  switch (d) {
    case Dialect::FO: return "FO";
    case Dialect::FO_ATOMS: return "FO_ATOMS";
    case Dialect::FO_ATOMS_NEG: return "FO_ATOMS_NEG";
    case Dialect::FOPT: return "FOPT";
  }
  return "?";
}

namespace detail {

struct DialectFlags {
  bool team_atom = false;
  bool bool_neg = false;
  bool fo_structure = false;  // split-or or unbounded quantifiers
  bool fopt_only = false;     // cmp, dot negation, global-or, E1/A1
};

inline void scan_dialect(const FormulaPtr& f, DialectFlags& fl) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
      return;
    case FKind::Indep:
    case FKind::Dep:
    case FKind::Marg:
    case FKind::EntropyEq:
      fl.team_atom = true;
      return;
    case FKind::Cmp:
      fl.fopt_only = true;
      return;
    case FKind::BoolNeg:
      fl.bool_neg = true;
      scan_dialect(f->a, fl);
      return;
    case FKind::DotNeg:
      fl.fopt_only = true;
      scan_dialect(f->a, fl);
      return;
    case FKind::And:
      scan_dialect(f->a, fl);
      scan_dialect(f->b, fl);
      return;
    case FKind::SplitOr:
      fl.fo_structure = true;
      scan_dialect(f->a, fl);
      scan_dialect(f->b, fl);
      return;
    case FKind::GlobalOr:
      fl.fopt_only = true;
      scan_dialect(f->a, fl);
      scan_dialect(f->b, fl);
      return;
    case FKind::Exists:
    case FKind::Forall:
      fl.fo_structure = true;
      scan_dialect(f->a, fl);
      return;
    case FKind::Exists1:
    case FKind::Forall1:
      fl.fopt_only = true;
      scan_dialect(f->a, fl);
      return;
  }
}

}  // namespace detail

inline Dialect dialect_of(const FormulaPtr& f) {
  detail::DialectFlags fl;
  detail::scan_dialect(f, fl);
  if (fl.fopt_only && (fl.team_atom || fl.bool_neg || fl.fo_structure))
    fail(ErrorKind::MixedDialect,
         "formula mixes weight-comparison connectives with team-logic ones");
  if (fl.fopt_only) return Dialect::FOPT;
  if (fl.bool_neg) return Dialect::FO_ATOMS_NEG;
  if (fl.team_atom) return Dialect::FO_ATOMS;
  return Dialect::FO;
}

// Conditions and their conjunctions sit in the shared core of every dialect,
// so such formulas pass both the FO and the FOPT evaluators.
inline bool fopt_compatible(const FormulaPtr& f) {
  detail::DialectFlags fl;
  detail::scan_dialect(f, fl);
  return !fl.team_atom && !fl.bool_neg && !fl.fo_structure;
}

namespace detail {

inline void collect_free_vars(const FormulaPtr& f, std::set<std::string>& bound,
                              std::set<std::string>& out) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
      for (const auto& t : f->args)
        if (!t.is_const && !bound.count(t.name)) out.insert(t.name);
      return;
    case FKind::Indep:
    case FKind::Dep:
    case FKind::Marg:
    case FKind::EntropyEq:
      for (const auto* tup : {&f->t0, &f->t1, &f->t2})
        for (const auto& v : *tup)
          if (!bound.count(v)) out.insert(v);
      return;
    case FKind::Cmp:
      for (const auto& c : f->conds)
        for (const auto& v : cond_vars(c))
          if (!bound.count(v)) out.insert(v);
      return;
    case FKind::BoolNeg:
    case FKind::DotNeg:
      collect_free_vars(f->a, bound, out);
      return;
    case FKind::And:
    case FKind::SplitOr:
    case FKind::GlobalOr:
      collect_free_vars(f->a, bound, out);
      collect_free_vars(f->b, bound, out);
      return;
    case FKind::Exists:
    case FKind::Forall:
    case FKind::Exists1:
    case FKind::Forall1: {
      bool was = bound.count(f->var) > 0;
      bound.insert(f->var);
      collect_free_vars(f->a, bound, out);
      if (!was) bound.erase(f->var);
      return;
    }
  }
}

inline void collect_all_vars(const FormulaPtr& f, std::set<std::string>& out) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
      for (const auto& t : f->args)
        if (!t.is_const) out.insert(t.name);
      return;
    case FKind::Indep:
    case FKind::Dep:
    case FKind::Marg:
    case FKind::EntropyEq:
      for (const auto* tup : {&f->t0, &f->t1, &f->t2}) out.insert(tup->begin(), tup->end());
      return;
    case FKind::Cmp:
      for (const auto& c : f->conds) {
        auto vs = cond_vars(c);
        out.insert(vs.begin(), vs.end());
      }
      return;
    default:
      if (!f->var.empty()) out.insert(f->var);
      if (f->a) collect_all_vars(f->a, out);
      if (f->b) collect_all_vars(f->b, out);
      return;
  }
}

}  // namespace detail

inline std::set<std::string> free_vars(const FormulaPtr& f) {
  std::set<std::string> bound, out;
  detail::collect_free_vars(f, bound, out);
  return out;
}

// Every variable occurring anywhere, bound or free. Used to pick fresh names.
inline std::set<std::string> all_vars(const FormulaPtr& f) {
  std::set<std::string> out;
  detail::collect_all_vars(f, out);
  return out;
}

inline std::string fresh_var(const std::string& base, std::set<std::string>& taken) {
  if (!taken.count(base)) {
    taken.insert(base);
    return base;
  }
  for (int i = 1;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!taken.count(cand)) {
      taken.insert(cand);
      return cand;
    }
  }
}

// A condition as a classical formula in negation normal form: negation is
// pushed down to literal polarity.
inline FormulaPtr cond_to_formula(const CondPtr& c, bool negate) {
  switch (c->kind) {
    case Cond::Kind::Rel:
      return Formula::rel_atom(c->rel, c->args, negate);
    case Cond::Kind::Eq:
      return Formula::eq(c->args[0], c->args[1], negate);
    case Cond::Kind::Not:
      return cond_to_formula(c->a, !negate);
    case Cond::Kind::And: {
      auto l = cond_to_formula(c->a, negate);
      auto r = cond_to_formula(c->b, negate);
      return Formula::binary(negate ? FKind::SplitOr : FKind::And, l, r);
    }
  }
  fail(ErrorKind::BadInput, "corrupt condition node");
}

namespace detail {

inline FormulaPtr star(const FormulaPtr& f, bool neg) {
  switch (f->kind) {
    case FKind::RelAtom:
      return Formula::rel_atom(f->rel, f->args, neg ? !f->negated : f->negated);
    case FKind::Eq:
      return Formula::eq(f->args[0], f->args[1], neg ? !f->negated : f->negated);
    case FKind::And: {
      auto l = star(f->a, neg);
      auto r = star(f->b, neg);
      return Formula::binary(neg ? FKind::SplitOr : FKind::And, l, r);
    }
    case FKind::GlobalOr: {
      auto l = star(f->a, neg);
      auto r = star(f->b, neg);
      return Formula::binary(neg ? FKind::And : FKind::SplitOr, l, r);
    }
    case FKind::DotNeg:
      return star(f->a, !neg);
    case FKind::Cmp: {
      // cmp(d0|d1 <= d2|d3) goes to !d0 \/ !d1 \/ d2 \/ !d3 classically.
      auto c0 = cond_to_formula(f->conds[0], !neg);
      auto c1 = cond_to_formula(f->conds[1], !neg);
      auto c2 = cond_to_formula(f->conds[2], neg);
      auto c3 = cond_to_formula(f->conds[3], !neg);
      FKind join = neg ? FKind::And : FKind::SplitOr;
      return Formula::binary(join, Formula::binary(join, Formula::binary(join, c0, c1), c2), c3);
    }
    case FKind::Exists1:
      return Formula::quant(neg ? FKind::Forall : FKind::Exists, f->var, star(f->a, neg));
    case FKind::Forall1:
      return Formula::quant(neg ? FKind::Exists : FKind::Forall, f->var, star(f->a, neg));
    default:
      fail(ErrorKind::MixedDialect,
           "star translation applies to weight-comparison formulas only");
  }
}

}  // namespace detail

// The classical reading of a weight-comparison formula: on singleton teams
// both agree, and for sentences the team semantics collapses to it.
inline FormulaPtr star_translate(const FormulaPtr& f) {
  if (!fopt_compatible(f))
    fail(ErrorKind::MixedDialect,
         "star translation applies to weight-comparison formulas only");
  return detail::star(f, false);
}

}  // namespace ptl
