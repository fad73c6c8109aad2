#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ptl/atoms.hpp"
#include "ptl/dialect.hpp"
#include "ptl/errors.hpp"
#include "ptl/fopt.hpp"
#include "ptl/formula.hpp"
#include "ptl/instance.hpp"
#include "ptl/team_ops.hpp"

namespace ptl {

// Search grid: split shares and quantifier distributions use multiples of
// 1/den. den = 1 gives all-or-nothing splits and point-mass extensions.
struct Bound {
  unsigned den = 1;
};

struct TeamEvalOptions {
  double entropy_eps = 1e-9;
  std::uint64_t budget = 10000000;  // candidate evaluations before Overflow
};

namespace detail {

inline bool is_literal(const FormulaPtr& f) {
  return f->kind == FKind::RelAtom || f->kind == FKind::Eq;
}

inline bool is_team_atom(const FormulaPtr& f) {
  return f->kind == FKind::Indep || f->kind == FKind::Dep || f->kind == FKind::Marg ||
         f->kind == FKind::EntropyEq;
}

inline bool search_free(const FormulaPtr& f) {
  if (f->kind == FKind::SplitOr || f->kind == FKind::Exists) return false;
  if (f->a && !search_free(f->a)) return false;
  if (f->b && !search_free(f->b)) return false;
  return true;
}

inline bool plain_fo(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
      return true;
    case FKind::And:
    case FKind::SplitOr:
      return plain_fo(f->a) && plain_fo(f->b);
    case FKind::Exists:
    case FKind::Forall:
      return plain_fo(f->a);
    default:
      return false;
  }
}

[[noreturn]] inline void reject_fopt_node(const FormulaPtr& f) {
  fail(ErrorKind::MixedDialect,
       "team evaluation got a weight-comparison connective: " +
           std::string(f->kind == FKind::Cmp ? "cmp" : "FOPT operator"));
}

}  // namespace detail

// Evaluates the search-free fragment: atoms, literals, conjunction, Boolean
// negation and universal quantification. Split disjunction and existential
// quantification raise SearchRequired; use eval_bounded or a witness there.
inline bool eval_exact(const Structure& A, const WeightedTeam& X, const FormulaPtr& f,
                       const TeamEvalOptions& opts = {}) {
  EvalOptions atom_opts{opts.entropy_eps};
  switch (f->kind) {
    case FKind::RelAtom:
    case FKind::Eq:
    case FKind::Indep:
    case FKind::Dep:
    case FKind::Marg:
    case FKind::EntropyEq:
      return eval_atom(A, X, f, atom_opts);
    case FKind::And:
      return eval_exact(A, X, f->a, opts) && eval_exact(A, X, f->b, opts);
    case FKind::BoolNeg:
      return !eval_exact(A, X, f->a, opts);
    case FKind::Forall: {
      std::vector<Elem> all(A.size());
      for (Elem a = 0; a < A.size(); ++a) all[a] = a;
      return eval_exact(A, duplicate(X, f->var, all), f->a, opts);
    }
    case FKind::SplitOr:
    case FKind::Exists:
      fail(ErrorKind::SearchRequired,
           "formula needs split or extension search; use a bound or a witness");
    default:
      detail::reject_fopt_node(f);
  }
}

namespace detail {

// Literals that every support row of a satisfying team must meet. Only
// conjunctive structure is inspected; anything else promises nothing.
inline void necessary_literals(const FormulaPtr& f, std::vector<const Formula*>& out) {
  if (is_literal(f)) {
    out.push_back(f.get());
    return;
  }
  if (f->kind == FKind::And) {
    necessary_literals(f->a, out);
    necessary_literals(f->b, out);
  }
}

inline void flatten_and(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->kind == FKind::And) {
    flatten_and(f->a, out);
    flatten_and(f->b, out);
    return;
  }
  out.push_back(f);
}

// All ways to write total as an ordered sum of parts nonnegative integers.
inline std::vector<std::vector<unsigned>> compositions(unsigned total,
                                                       std::size_t parts) {
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> cur(parts, 0);
  std::function<void(std::size_t, unsigned)> go = [&](std::size_t i, unsigned left) {
    if (i + 1 == parts) {
      cur[i] = left;
      out.push_back(cur);
      return;
    }
    for (unsigned v = 0; v <= left; ++v) {
      cur[i] = v;
      go(i + 1, left - v);
    }
  };
  if (parts == 0) return out;
  go(0, total);
  return out;
}

struct BoundedEval {
  const Structure& A;
  Bound bound;
  TeamEvalOptions opts;
  std::uint64_t steps = 0;

  void tick() {
    if (++steps > opts.budget)
      fail(ErrorKind::Overflow, "bounded search exceeded its node budget (" +
                                    std::to_string(opts.budget) + " steps)");
  }

  bool eval(const WeightedTeam& X, const FormulaPtr& f) {
    tick();
    // Plain first-order formulas are flat: the team satisfies one exactly
    // when every support row does classically, and such witnesses use only
    // whole-row splits and point-mass extensions, which lie in every grid.
    if ((f->kind == FKind::SplitOr || f->kind == FKind::Exists ||
         f->kind == FKind::Forall) &&
        plain_fo(f)) {
      for (const auto& r : X.rows) {
        if (r.weight == 0) continue;
        tick();
        Assignment asg;
        for (std::size_t i = 0; i < X.vars.size(); ++i) asg[X.vars[i]] = r.tuple[i];
        if (!eval_fo(A, asg, f)) return false;
      }
      return true;
    }
    EvalOptions atom_opts{opts.entropy_eps};
    switch (f->kind) {
      case FKind::RelAtom:
      case FKind::Eq:
      case FKind::Indep:
      case FKind::Dep:
      case FKind::Marg:
      case FKind::EntropyEq:
        return eval_atom(A, X, f, atom_opts);
      case FKind::And:
        return eval(X, f->a) && eval(X, f->b);
      case FKind::BoolNeg:
        return !eval(X, f->a);
      case FKind::Forall: {
        std::vector<Elem> all(A.size());
        for (Elem a = 0; a < A.size(); ++a) all[a] = a;
        return eval(duplicate(X, f->var, all), f->a);
      }
      case FKind::SplitOr:
        return split_search(X, f);
      case FKind::Exists:
        return exists_search(X, f);
      default:
        reject_fopt_node(f);
    }
  }

  bool row_compatible(const WeightedTeam& X, const std::vector<const Formula*>& lits,
                      const Tuple& row) {
    VarIndex idx(X.vars);
    for (const Formula* l : lits)
      if (!row_satisfies_literal(A, *l, row, idx)) return false;
    return true;
  }

  // Split disjunction: every row-wise split on the grid. Rows violating the
  // necessary literals of one side are forced to the other; rows compatible
  // with neither refute the disjunction outright.
  bool split_search(const WeightedTeam& X, const FormulaPtr& f) {
    const unsigned D = bound.den;
    std::vector<const Formula*> la, lb;
    necessary_literals(f->a, la);
    necessary_literals(f->b, lb);

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < X.rows.size(); ++i)
      if (X.rows[i].weight != 0) support.push_back(i);

    std::vector<unsigned> share(X.rows.size(), 0);  // left-side numerator
    std::vector<std::size_t> free_rows;
    for (std::size_t i : support) {
      bool ca = row_compatible(X, la, X.rows[i].tuple);
      bool cb = row_compatible(X, lb, X.rows[i].tuple);
      if (!ca && !cb) return false;
      if (ca && cb)
        free_rows.push_back(i);
      else
        share[i] = ca ? D : 0;
    }

    // Try all-left first, then all-right, then interior shares.
    std::vector<unsigned> order = {D, 0};
    for (unsigned m = 1; m < D; ++m) order.push_back(m);

    std::vector<std::size_t> pick(free_rows.size(), 0);
    while (true) {
      for (std::size_t j = 0; j < free_rows.size(); ++j)
        share[free_rows[j]] = order[pick[j]];
      tick();
      if (try_split(X, share, f)) return true;
      std::size_t j = 0;
      for (; j < free_rows.size(); ++j) {
        if (++pick[j] < order.size()) break;
        pick[j] = 0;
      }
      if (j == free_rows.size()) return false;
    }
  }

  bool try_split(const WeightedTeam& X, const std::vector<unsigned>& share,
                 const FormulaPtr& f) {
    const unsigned D = bound.den;
    WeightedTeam Y, Z;
    Y.vars = X.vars;
    Z.vars = X.vars;
    for (std::size_t i = 0; i < X.rows.size(); ++i) {
      if (X.rows[i].weight == 0) continue;
      if (share[i] > 0)
        Y.rows.push_back(Row{X.rows[i].tuple, X.rows[i].weight * Rat(share[i], D)});
      if (share[i] < D)
        Z.rows.push_back(Row{X.rows[i].tuple, X.rows[i].weight * Rat(D - share[i], D)});
    }
    if (!Y.rows.empty() && !eval(Y, f->a)) return false;
    if (!Z.rows.empty() && !eval(Z, f->b)) return false;
    return true;
  }

  // Existential quantification: conjuncts that do not mention the variable
  // are decided on X itself; the rest are searched over all grid-valued
  // extension tables, point masses first.
  bool exists_search(const WeightedTeam& X, const FormulaPtr& f) {
    const unsigned D = bound.den;
    const std::string& x = f->var;
    std::vector<FormulaPtr> conjuncts;
    flatten_and(f->a, conjuncts);
    std::vector<FormulaPtr> dependent;
    for (const auto& c : conjuncts) {
      if (free_vars(c).count(x))
        dependent.push_back(c);
      else if (!eval(X, c))
        return false;
    }
    if (dependent.empty()) return true;

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < X.rows.size(); ++i)
      if (X.rows[i].weight != 0) support.push_back(i);
    if (support.empty()) return true;

    const std::size_t n = A.size();
    std::vector<std::vector<Rat>> menu;  // candidate distributions, shared per row
    for (std::size_t e = 0; e < n; ++e) {
      std::vector<Rat> pm(n, Rat(0));
      pm[e] = 1;
      menu.push_back(std::move(pm));
    }
    std::size_t point_mass_count = menu.size();
    for (const auto& comp : compositions(D, n)) {
      bool pure = false;
      for (unsigned v : comp)
        if (v == D) pure = true;
      if (pure) continue;
      std::vector<Rat> dist;
      for (unsigned v : comp) dist.emplace_back(v, D);
      menu.push_back(std::move(dist));
    }

    auto run = [&](std::size_t lo, std::size_t hi, bool skip_all_pure) -> bool {
      std::vector<std::size_t> pick(support.size(), lo);
      while (true) {
        bool all_pure = true;
        for (std::size_t p : pick)
          if (p >= point_mass_count) all_pure = false;
        if (!(skip_all_pure && all_pure)) {
          tick();
          ExtensionMap F;
          for (std::size_t j = 0; j < support.size(); ++j)
            F[support[j]] = menu[pick[j]];
          auto XF = extend(X, x, F, n);
          bool ok = true;
          for (const auto& c : dependent)
            if (!eval(XF, c)) {
              ok = false;
              break;
            }
          if (ok) return true;
        }
        std::size_t j = 0;
        for (; j < pick.size(); ++j) {
          if (++pick[j] < hi) break;
          pick[j] = lo;
        }
        if (j == pick.size()) return false;
      }
    };

    if (run(0, point_mass_count, false)) return true;
    if (menu.size() > point_mass_count && run(0, menu.size(), true)) return true;
    return false;
  }
};

}  // namespace detail

// Team semantics where splits and extensions range over the 1/den grid.
// Sound for the full logic at every den; for formulas without Boolean
// negation, coarser grids only shrink the witness space, so verdicts grow
// monotonically as den gains divisors.
inline bool eval_bounded(const Structure& A, const WeightedTeam& X, const FormulaPtr& f,
                         Bound bound, const TeamEvalOptions& opts = {}) {
  if (bound.den < 1) fail(ErrorKind::BadInput, "grid denominator must be >= 1");
  detail::BoundedEval ev{A, bound, opts};
  return ev.eval(X, f);
}

// Witness payloads, keyed by the node's path in the syntax tree: the root is
// "" and child edges append .0 / .1. Row indices refer to the canonical row
// order of the team reaching that node.
struct SplitWitness {
  Rat k;
  std::vector<Rat> yw, zw;
};

struct ExistsWitness {
  std::map<std::size_t, std::vector<Rat>> F;
};

struct Witness {
  std::map<std::string, SplitWitness> splits;
  std::map<std::string, ExistsWitness> exists;
};

namespace detail {

struct WitnessCheck {
  const Structure& A;
  const Witness& w;
  TeamEvalOptions opts;

  static std::string child(const std::string& path, int i) {
    return path.empty() ? std::to_string(i) : path + "." + std::to_string(i);
  }

  bool check(const WeightedTeam& X, const FormulaPtr& f, const std::string& path) {
    EvalOptions atom_opts{opts.entropy_eps};
    switch (f->kind) {
      case FKind::RelAtom:
      case FKind::Eq:
      case FKind::Indep:
      case FKind::Dep:
      case FKind::Marg:
      case FKind::EntropyEq:
        return eval_atom(A, X, f, atom_opts);
      case FKind::And:
        return check(X, f->a, child(path, 0)) && check(X, f->b, child(path, 1));
      case FKind::BoolNeg:
        if (!search_free(f->a))
          fail(ErrorKind::WitnessInsufficient,
               "Boolean negation over a search construct cannot be certified by "
               "a witness (path \"" + path + "\")");
        return !eval_exact(A, X, f->a, opts);
      case FKind::Forall: {
        std::vector<Elem> all(A.size());
        for (Elem a = 0; a < A.size(); ++a) all[a] = a;
        return check(duplicate(X, f->var, all), f->a, child(path, 0));
      }
      case FKind::SplitOr:
        return check_split(X, f, path);
      case FKind::Exists:
        return check_exists(X, f, path);
      default:
        reject_fopt_node(f);
    }
  }

  bool check_split(const WeightedTeam& X, const FormulaPtr& f, const std::string& path) {
    auto it = w.splits.find(path);
    if (it == w.splits.end())
      fail(ErrorKind::WitnessShape, "missing split witness at path \"" + path + "\"");
    const SplitWitness& sw = it->second;
    if (sw.yw.size() != X.rows.size() || sw.zw.size() != X.rows.size())
      fail(ErrorKind::WitnessShape,
           "split witness at path \"" + path + "\" has " + std::to_string(sw.yw.size()) +
               " rows, team has " + std::to_string(X.rows.size()));
    Rat ysum = 0;
    WeightedTeam Y, Z;
    Y.vars = X.vars;
    Z.vars = X.vars;
    for (std::size_t i = 0; i < X.rows.size(); ++i) {
      if (sw.yw[i] < 0 || sw.zw[i] < 0)
        fail(ErrorKind::WitnessShape, "negative split weight at path \"" + path + "\"");
      if (sw.yw[i] + sw.zw[i] != X.rows[i].weight)
        fail(ErrorKind::WitnessShape,
             "split at path \"" + path + "\" does not reproduce the team weights");
      ysum += sw.yw[i];
      if (sw.yw[i] != 0) Y.rows.push_back(Row{X.rows[i].tuple, sw.yw[i]});
      if (sw.zw[i] != 0) Z.rows.push_back(Row{X.rows[i].tuple, sw.zw[i]});
    }
    if (sw.k < 0 || sw.k > 1)
      fail(ErrorKind::WitnessShape, "split factor outside [0,1] at path \"" + path + "\"");
    if (sw.k * X.total_weight() != ysum)
      fail(ErrorKind::WitnessShape,
           "split factor at path \"" + path + "\" does not match the left share");
    if (!Y.rows.empty() && !check(Y, f->a, child(path, 0))) return false;
    if (!Z.rows.empty() && !check(Z, f->b, child(path, 1))) return false;
    return true;
  }

  bool check_exists(const WeightedTeam& X, const FormulaPtr& f, const std::string& path) {
    auto it = w.exists.find(path);
    if (it == w.exists.end())
      fail(ErrorKind::WitnessShape, "missing extension witness at path \"" + path + "\"");
    ExtensionMap F;
    for (const auto& [row, dist] : it->second.F) F[row] = dist;
    for (std::size_t i = 0; i < X.rows.size(); ++i)
      if (X.rows[i].weight != 0 && !F.count(i))
        fail(ErrorKind::WitnessShape, "extension witness at path \"" + path +
                                          "\" lacks a distribution for row " +
                                          std::to_string(i));
    WeightedTeam XF;
    try {
      XF = extend(X, f->var, F, A.size());
    } catch (const Error& e) {
      fail(ErrorKind::WitnessShape,
           "extension witness at path \"" + path + "\" is malformed: " + e.what());
    }
    return check(XF, f->a, child(path, 0));
  }
};

}  // namespace detail

// Verifies a satisfaction claim with explicit split and extension choices.
// All arithmetic is exact; a true result certifies satisfaction.
inline bool check_witness(const Structure& A, const WeightedTeam& X, const FormulaPtr& f,
                          const Witness& w, const TeamEvalOptions& opts = {}) {
  detail::WitnessCheck wc{A, w, opts};
  return wc.check(X, f, "");
}

inline Witness witness_from_json(const Json& j, const Structure& A) {
  Witness w;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const Json& node = it.value();
    if (node.contains("k")) {
      SplitWitness sw;
      sw.k = weight_from_json(node.at("k"));
      for (const auto& v : node.at("yw")) sw.yw.push_back(weight_from_json(v));
      for (const auto& v : node.at("zw")) sw.zw.push_back(weight_from_json(v));
      w.splits[it.key()] = std::move(sw);
    } else if (node.contains("F")) {
      ExistsWitness ew;
      const Json& table = node.at("F");
      for (auto rit = table.begin(); rit != table.end(); ++rit) {
        std::size_t row = std::stoul(rit.key());
        std::vector<Rat> dist(A.size(), Rat(0));
        for (auto eit = rit.value().begin(); eit != rit.value().end(); ++eit)
          dist[A.elem(eit.key())] = weight_from_json(eit.value());
        ew.F[row] = std::move(dist);
      }
      w.exists[it.key()] = std::move(ew);
    } else {
      fail(ErrorKind::WitnessShape,
           "witness node \"" + it.key() + "\" is neither a split nor an extension");
    }
  }
  return w;
}

}  // namespace ptl
