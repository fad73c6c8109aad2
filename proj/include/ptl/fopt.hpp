#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptl/atoms.hpp"
#include "ptl/condition.hpp"
#include "ptl/dialect.hpp"
#include "ptl/errors.hpp"
#include "ptl/formula.hpp"
#include "ptl/printer.hpp"
#include "ptl/team_ops.hpp"

namespace ptl {

struct FoptTraceNode {
  std::string label;
  bool verdict = false;
  std::vector<Rat> weights;  // the four comparison weights at cmp nodes
  std::vector<FoptTraceNode> children;
};

struct FoptVerdict {
  bool value = false;
  std::optional<FoptTraceNode> trace;
};

struct FoptOptions {
  int trace_depth = 0;  // levels of trace to record, 0 disables tracing
};

namespace detail {

struct FoptEval {
  const Structure& A;
  const FoptOptions& opts;

  bool flat(const WeightedTeam& X, const FormulaPtr& f) {
    VarIndex idx(X.vars);
    for (const auto& v : free_vars(f)) X.var_index(v);
    for (const auto& r : X.rows) {
      if (r.weight == 0) continue;
      if (!row_satisfies_literal(A, *f, r.tuple, idx)) return false;
    }
    return true;
  }

  bool eval(const WeightedTeam& X, const FormulaPtr& f, int depth,
            FoptTraceNode* trace) {
    bool value = false;
    switch (f->kind) {
      case FKind::RelAtom:
      case FKind::Eq:
        value = flat(X, f);
        break;
      case FKind::And: {
        bool l = sub(X, f->a, depth, trace, "");
        bool r = sub(X, f->b, depth, trace, "");
        value = l && r;
        break;
      }
      case FKind::GlobalOr: {
        bool l = sub(X, f->a, depth, trace, "");
        bool r = sub(X, f->b, depth, trace, "");
        value = l || r;
        break;
      }
      case FKind::DotNeg:
        value = !sub(X, f->a, depth, trace, "") || X.support_empty();
        break;
      case FKind::Cmp: {
        auto d01 = Cond::make_and(f->conds[0], f->conds[1]);
        auto d23 = Cond::make_and(f->conds[2], f->conds[3]);
        Rat w01 = weight(A, X, d01);
        Rat w3 = weight(A, X, f->conds[3]);
        Rat w23 = weight(A, X, d23);
        Rat w1 = weight(A, X, f->conds[1]);
        value = w01 * w3 <= w23 * w1;
        if (trace) trace->weights = {w01, w3, w23, w1};
        break;
      }
      case FKind::Exists1:
      case FKind::Forall1: {
        bool is_exists = f->kind == FKind::Exists1;
        value = !is_exists;
        for (Elem a = 0; a < A.size(); ++a) {
          auto Xa = duplicate(X, f->var, {a});
          bool v = sub(Xa, f->a, depth, trace, f->var + " := " + A.elem_name(a));
          if (is_exists && v) { value = true; break; }
          if (!is_exists && !v) { value = false; break; }
        }
        break;
      }
      default:
        fail(ErrorKind::MixedDialect,
             "the weight-comparison evaluator got a team-logic connective");
    }
    if (trace) trace->verdict = value;
    return value;
  }

  bool sub(const WeightedTeam& X, const FormulaPtr& f, int depth,
           FoptTraceNode* parent, const std::string& note) {
    FoptTraceNode* child = nullptr;
    if (parent && depth + 1 < opts.trace_depth) {
      parent->children.push_back({});
      child = &parent->children.back();
      child->label = (note.empty() ? "" : "[" + note + "] ") + print_formula(f);
    }
    return eval(X, f, depth + 1, child);
  }
};

}  // namespace detail

// Team semantics of the weight-comparison dialect. Weighted teams are taken
// as given; no clause normalizes, so verdicts are scale invariant.
inline FoptVerdict eval_fopt(const Structure& A, const WeightedTeam& X,
                             const FormulaPtr& f, const FoptOptions& opts = {}) {
  if (!fopt_compatible(f))
    fail(ErrorKind::MixedDialect,
         "the weight-comparison evaluator needs a formula of its dialect");
  detail::FoptEval ev{A, opts};
  FoptVerdict out;
  if (opts.trace_depth > 0) {
    FoptTraceNode root;
    root.label = print_formula(f);
    out.value = ev.eval(X, f, 0, &root);
    out.trace = std::move(root);
  } else {
    out.value = ev.eval(X, f, 0, nullptr);
  }
  return out;
}

using Assignment = std::map<std::string, Elem>;

// Classical Tarski evaluation of first-order formulas.
inline bool eval_fo(const Structure& A, const Assignment& s, const FormulaPtr& f) {
  auto term_val = [&](const Term& t) -> Elem {
    if (t.is_const) return A.constant(t.name);
    auto it = s.find(t.name);
    if (it == s.end())
      fail(ErrorKind::UnknownVariable, "unbound variable: " + t.name);
    return it->second;
  };
  switch (f->kind) {
    case FKind::RelAtom: {
      const Relation& rel = A.relation(f->rel);
      if (rel.arity != f->args.size())
        fail(ErrorKind::ArityMismatch, "relation arity mismatch: " + f->rel);
      Tuple t;
      for (const auto& a : f->args) t.push_back(term_val(a));
      return rel.contains(t) != f->negated;
    }
    case FKind::Eq:
      return (term_val(f->args[0]) == term_val(f->args[1])) != f->negated;
    case FKind::And:
      return eval_fo(A, s, f->a) && eval_fo(A, s, f->b);
    case FKind::SplitOr:
      return eval_fo(A, s, f->a) || eval_fo(A, s, f->b);
    case FKind::Exists:
    case FKind::Forall: {
      bool is_exists = f->kind == FKind::Exists;
      Assignment s2 = s;
      for (Elem a = 0; a < A.size(); ++a) {
        s2[f->var] = a;
        bool v = eval_fo(A, s2, f->a);
        if (is_exists && v) return true;
        if (!is_exists && !v) return false;
      }
      return !is_exists;
    }
    default:
      fail(ErrorKind::Unsupported,
           "classical evaluation covers first-order formulas only");
  }
}

// First-order formulas are flat: a team satisfies one exactly when every
// support row does classically.
inline bool eval_fo_flat(const Structure& A, const WeightedTeam& X,
                         const FormulaPtr& f) {
  if (dialect_of(f) != Dialect::FO)
    fail(ErrorKind::Unsupported, "flat evaluation covers first-order formulas only");
  for (const auto& v : free_vars(f)) X.var_index(v);
  for (const auto& r : X.rows) {
    if (r.weight == 0) continue;
    Assignment s;
    for (std::size_t i = 0; i < X.vars.size(); ++i) s[X.vars[i]] = r.tuple[i];
    if (!eval_fo(A, s, f)) return false;
  }
  return true;
}

// Sentences of the weight-comparison dialect reduce to classical truth of
// their star translation.
inline bool check_sentence_fopt(const Structure& A, const FormulaPtr& f) {
  if (!fopt_compatible(f))
    fail(ErrorKind::MixedDialect, "expected a weight-comparison formula");
  if (!free_vars(f).empty())
    fail(ErrorKind::BadInput, "sentence required: formula has free variables");
  return eval_fo(A, {}, star_translate(f));
}

// Embeds a first-order formula into the weight-comparison dialect. The two
// agree along any evaluation that keeps supports singleton, in particular
// for sentences checked from the unit empty team.
inline FormulaPtr fo_to_fopt(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
      return f;
    case FKind::And:
      return Formula::binary(FKind::And, fo_to_fopt(f->a), fo_to_fopt(f->b));
    case FKind::SplitOr:
      return Formula::binary(FKind::GlobalOr, fo_to_fopt(f->a), fo_to_fopt(f->b));
    case FKind::Exists:
      return Formula::quant(FKind::Exists1, f->var, fo_to_fopt(f->a));
    case FKind::Forall:
      return Formula::quant(FKind::Forall1, f->var, fo_to_fopt(f->a));
    default:
      fail(ErrorKind::Unsupported, "only first-order formulas embed this way");
  }
}

}  // namespace ptl
