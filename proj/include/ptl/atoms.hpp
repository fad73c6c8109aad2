#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptl/condition.hpp"
#include "ptl/dialect.hpp"
#include "ptl/errors.hpp"
#include "ptl/formula.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"
#include "ptl/team_ops.hpp"

namespace ptl {

struct EvalOptions {
  double entropy_eps = 1e-9;
};

// Base-2 entropy of the normalized marginal distribution of xs in X, with
// 0 * log 0 read as 0. Exact rational marginals are converted to double only
// for the final logarithm sum.
inline double entropy(const WeightedTeam& X, const std::vector<std::string>& xs) {
  if (X.support_empty())
    fail(ErrorKind::EmptyTeam, "entropy of a team with empty support");
  auto cols = column_indices(X, xs);
  auto marg = marginal_map(X, cols);
  Rat total = X.total_weight();
  double h = 0.0;
  for (const auto& [t, w] : marg) {
    double p = to_double(w / total);
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

namespace detail {

inline bool row_satisfies_literal(const Structure& A, const Formula& f,
                                  const Tuple& row, const VarIndex& idx) {
  if (f.kind == FKind::RelAtom) {
    const Relation& rel = A.relation(f.rel);
    if (rel.arity != f.args.size())
      fail(ErrorKind::ArityMismatch, "relation arity mismatch: " + f.rel);
    Tuple t;
    t.reserve(f.args.size());
    for (const auto& a : f.args) t.push_back(eval_term(A, a, row, idx));
    return rel.contains(t) != f.negated;
  }
  if (f.kind == FKind::Eq) {
    bool eq = eval_term(A, f.args[0], row, idx) == eval_term(A, f.args[1], row, idx);
    return eq != f.negated;
  }
  fail(ErrorKind::BadInput, "not a literal");
}

// Conditional independence, checked exactly: for every assignment s over the
// variables of the atom,
//   |X_{xy=s}| * |X_{xz=s}| = |X_{xyz=s}| * |X_{x=s}|.
// A violation needs both left factors nonzero, so it suffices to scan pairs
// of support tuples of the xy- and xz-marginals that agree on shared
// variables.
inline bool indep_holds(const WeightedTeam& X, const std::vector<std::string>& xs,
                        const std::vector<std::string>& ys,
                        const std::vector<std::string>& zs) {
  std::vector<std::string> xy = xs, xz = xs, xyz = xs;
  xy.insert(xy.end(), ys.begin(), ys.end());
  xz.insert(xz.end(), zs.begin(), zs.end());
  xyz.insert(xyz.end(), ys.begin(), ys.end());
  xyz.insert(xyz.end(), zs.begin(), zs.end());

  auto m_x = marginal_map(X, column_indices(X, xs));
  auto m_xy = marginal_map(X, column_indices(X, xy));
  auto m_xz = marginal_map(X, column_indices(X, xz));
  auto m_xyz = marginal_map(X, column_indices(X, xyz));

  auto value_of = [](const std::vector<std::string>& layout, const Tuple& t,
                     const std::string& v, Elem& out) {
    for (std::size_t i = 0; i < layout.size(); ++i)
      if (layout[i] == v) {
        out = t[i];
        return true;
      }
    return false;
  };

  std::set<std::string> shared_set;
  {
    std::set<std::string> a(xy.begin(), xy.end());
    for (const auto& v : xz)
      if (a.count(v)) shared_set.insert(v);
  }
  std::vector<std::string> shared(shared_set.begin(), shared_set.end());

  for (const auto& [u, wu] : m_xy) {
    for (const auto& [v, wv] : m_xz) {
      bool consistent = true;
      for (const auto& s : shared) {
        Elem eu = 0, ev = 0;
        value_of(xy, u, s, eu);
        value_of(xz, v, s, ev);
        if (eu != ev) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;
      // The pair determines an assignment on all atom variables.
      auto lookup = [&](const std::string& var) {
        Elem e = 0;
        if (!value_of(xy, u, var, e)) value_of(xz, v, var, e);
        return e;
      };
      Tuple t_x, t_xyz;
      for (const auto& var : xs) t_x.push_back(lookup(var));
      for (const auto& var : xyz) t_xyz.push_back(lookup(var));
      Rat lhs = wu * wv;
      auto itj = m_xyz.find(t_xyz);
      Rat joint = itj == m_xyz.end() ? Rat(0) : itj->second;
      auto itx = m_x.find(t_x);
      Rat base = itx == m_x.end() ? Rat(0) : itx->second;
      if (lhs != joint * base) return false;
    }
  }
  return true;
}

inline bool dep_holds(const WeightedTeam& X, const std::vector<std::string>& xs,
                      const std::vector<std::string>& ys) {
  auto cx = column_indices(X, xs);
  auto cy = column_indices(X, ys);
  std::map<Tuple, Tuple> fn;
  for (const auto& r : X.rows) {
    if (r.weight == 0) continue;
    Tuple kx = project(r.tuple, cx);
    Tuple ky = project(r.tuple, cy);
    auto [it, inserted] = fn.emplace(std::move(kx), ky);
    if (!inserted && it->second != ky) return false;
  }
  return true;
}

}  // namespace detail

// Evaluates one atom (or literal) on a team. Literals must hold on every
// support row; the team atoms compare exact marginal weights, except the
// entropy atom which compares within opts.entropy_eps.
inline bool eval_atom(const Structure& A, const WeightedTeam& X, const FormulaPtr& f,
                      const EvalOptions& opts = {}) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq: {
      VarIndex idx(X.vars);
      for (const auto& v : free_vars(f)) X.var_index(v);
      for (const auto& r : X.rows) {
        if (r.weight == 0) continue;
        if (!detail::row_satisfies_literal(A, *f, r.tuple, idx)) return false;
      }
      return true;
    }
    case FKind::Indep:
      return detail::indep_holds(X, f->t0, f->t1, f->t2);
    case FKind::Dep:
      return detail::dep_holds(X, f->t0, f->t1);
    case FKind::Marg: {
      auto lhs = marginal_map(X, column_indices(X, f->t0));
      auto rhs = marginal_map(X, column_indices(X, f->t1));
      return lhs == rhs;
    }
    case FKind::EntropyEq: {
      double hl = entropy(X, f->t0);
      double hr = entropy(X, f->t1);
      return std::fabs(hl - hr) <= opts.entropy_eps;
    }
    default:
      fail(ErrorKind::BadInput, "eval_atom expects an atom or literal");
  }
}

namespace detail {

template <typename Fn>
inline FormulaPtr map_atoms(const FormulaPtr& f, Fn&& fn) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
    case FKind::Indep:
    case FKind::Dep:
    case FKind::Marg:
    case FKind::EntropyEq:
    case FKind::Cmp:
      return fn(f);
    case FKind::BoolNeg:
    case FKind::DotNeg:
      return Formula::unary(f->kind, map_atoms(f->a, fn));
    case FKind::And:
    case FKind::SplitOr:
    case FKind::GlobalOr:
      return Formula::binary(f->kind, map_atoms(f->a, fn), map_atoms(f->b, fn));
    case FKind::Exists:
    case FKind::Forall:
    case FKind::Exists1:
    case FKind::Forall1:
      return Formula::quant(f->kind, f->var, map_atoms(f->a, fn));
  }
  fail(ErrorKind::BadInput, "corrupt formula node");
}

}  // namespace detail

// dep(xs ; ys) holds exactly when ys is independent of itself given xs.
inline FormulaPtr rewrite_dep_to_indep(const FormulaPtr& f) {
  return detail::map_atoms(f, [](const FormulaPtr& g) -> FormulaPtr {
    if (g->kind != FKind::Dep) return g;
    return Formula::indep(g->t0, g->t1, g->t1);
  });
}

// dep(xs ; ys) holds exactly when adjoining ys adds no entropy to xs.
inline FormulaPtr rewrite_dep_to_entropy(const FormulaPtr& f) {
  return detail::map_atoms(f, [](const FormulaPtr& g) -> FormulaPtr {
    if (g->kind != FKind::Dep) return g;
    std::vector<std::string> joint = g->t0;
    joint.insert(joint.end(), g->t1.begin(), g->t1.end());
    return Formula::entropy_eq(g->t0, joint);
  });
}

namespace detail {

// psi -> phi as the split disjunction psi_neg \/ (psi & phi), for flat psi.
inline FormulaPtr guarded(FormulaPtr psi_neg, FormulaPtr psi, FormulaPtr phi) {
  return Formula::binary(FKind::SplitOr, std::move(psi_neg),
                         Formula::binary(FKind::And, std::move(psi), std::move(phi)));
}

inline FormulaPtr and_chain(std::vector<FormulaPtr> fs) {
  FormulaPtr out = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i)
    out = Formula::binary(FKind::And, out, fs[i]);
  return out;
}

}  // namespace detail

// Marginal independence through entropy atoms: over structures with the two
// distinct constants zero and one,
//   indep(; xs ; ys)
// is equivalent to a formula that splits on a fresh universally quantified z
// and stacks halved copies of the xs-, ys- and xsys-distributions, using the
// identity H(half X) = 1/2 + 1/2 H(X). Dependence atoms introduced by the
// template are themselves rewritten, so the result only uses entropy atoms.
// Conditional independence atoms are not covered and are rejected.
inline FormulaPtr rewrite_indep_to_entropy(const FormulaPtr& f) {
  std::set<std::string> taken = all_vars(f);
  return detail::map_atoms(f, [&taken](const FormulaPtr& g) -> FormulaPtr {
    if (g->kind != FKind::Indep) return g;
    if (!g->t0.empty())
      fail(ErrorKind::ConditionNotEmpty,
           "entropy rewrite covers marginal independence only; the atom has a "
           "nonempty condition tuple");
    const auto& xs = g->t1;
    const auto& ys = g->t2;
    std::vector<std::string> xy = xs;
    xy.insert(xy.end(), ys.begin(), ys.end());

    std::string z = fresh_var("z", taken);
    std::vector<std::string> us, vs;
    std::size_t ulen = std::max(xs.size(), ys.size());
    for (std::size_t i = 0; i < ulen; ++i) us.push_back(fresh_var("u", taken));
    for (std::size_t i = 0; i < xy.size(); ++i) vs.push_back(fresh_var("v", taken));

    Term tz = Term::var(z);
    Term zero = Term::cons("zero");
    Term one = Term::cons("one");

    auto dep_pair = [](const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
      return Formula::binary(FKind::And, Formula::dep(a, b), Formula::dep(b, a));
    };

    std::vector<FormulaPtr> zero_deps = {dep_pair(us, xs), dep_pair(vs, xy)};
    FormulaPtr g0 = detail::guarded(Formula::eq(tz, zero, true),
                                    Formula::eq(tz, zero, false),
                                    detail::and_chain(zero_deps));

    std::vector<FormulaPtr> one_deps = {dep_pair(us, ys)};
    for (const auto& v : vs)
      one_deps.push_back(Formula::eq(Term::var(v), zero, false));
    FormulaPtr g1 = detail::guarded(Formula::eq(tz, one, true),
                                    Formula::eq(tz, one, false),
                                    detail::and_chain(one_deps));

    std::vector<std::string> uz = us, vz = vs;
    uz.push_back(z);
    vz.push_back(z);
    FormulaPtr both = Formula::binary(FKind::SplitOr, Formula::eq(tz, zero, false),
                                      Formula::eq(tz, one, false));
    FormulaPtr neither =
        Formula::binary(FKind::And, Formula::eq(tz, zero, true), Formula::eq(tz, one, true));
    FormulaPtr g2 = detail::guarded(neither, both, Formula::entropy_eq(uz, vz));

    FormulaPtr body = detail::and_chain({g0, g1, g2});
    for (auto it = vs.rbegin(); it != vs.rend(); ++it)
      body = Formula::quant(FKind::Exists, *it, body);
    for (auto it = us.rbegin(); it != us.rend(); ++it)
      body = Formula::quant(FKind::Exists, *it, body);
    body = Formula::quant(FKind::Forall, z, body);
    return rewrite_dep_to_entropy(body);
  });
}

}  // namespace ptl
