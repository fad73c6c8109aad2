#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ptl/atoms.hpp"
#include "ptl/dialect.hpp"
#include "ptl/errors.hpp"
#include "ptl/formula.hpp"
#include "ptl/instance.hpp"
#include "ptl/team.hpp"

namespace ptl {

// Term over (R, +, x, log) with rational constants. Var leaves index into
// RealSystem::vars; log appears only for entropy atoms and is consumed by
// the numeric solver, never by the SMT-LIB2 emitter.
struct RTerm {
  enum class Kind { Var, Const, Sum, Prod, Log };
  Kind kind = Kind::Const;
  std::size_t var = 0;
  Rat value = 0;
  std::vector<RTerm> args;

  static RTerm variable(std::size_t i) {
    RTerm t;
    t.kind = Kind::Var;
    t.var = i;
    return t;
  }
  static RTerm constant(Rat v) {
    RTerm t;
    t.kind = Kind::Const;
    t.value = std::move(v);
    return t;
  }
  static RTerm sum(std::vector<RTerm> xs) {
    RTerm t;
    t.kind = Kind::Sum;
    t.args = std::move(xs);
    return t;
  }
  static RTerm prod(RTerm a, RTerm b) {
    RTerm t;
    t.kind = Kind::Prod;
    t.args = {std::move(a), std::move(b)};
    return t;
  }
  static RTerm log_of(RTerm a) {
    RTerm t;
    t.kind = Kind::Log;
    t.args = {std::move(a)};
    return t;
  }
};

// Real-arithmetic formula: comparisons, Boolean structure and existential
// blocks binding a contiguous range of RealSystem::vars.
struct RFormula {
  enum class Kind { Le, Eq, Not, And, Exists };
  Kind kind = Kind::And;
  RTerm lhs, rhs;
  std::vector<RFormula> children;
  std::size_t block_begin = 0, block_end = 0;

  static RFormula le(RTerm a, RTerm b) {
    RFormula f;
    f.kind = Kind::Le;
    f.lhs = std::move(a);
    f.rhs = std::move(b);
    return f;
  }
  static RFormula eq(RTerm a, RTerm b) {
    RFormula f;
    f.kind = Kind::Eq;
    f.lhs = std::move(a);
    f.rhs = std::move(b);
    return f;
  }
  static RFormula negate(RFormula a) {
    RFormula f;
    f.kind = Kind::Not;
    f.children = {std::move(a)};
    return f;
  }
  static RFormula conj(std::vector<RFormula> xs) {
    RFormula f;
    f.kind = Kind::And;
    f.children = std::move(xs);
    return f;
  }
  static RFormula block(std::size_t begin, std::size_t end, RFormula body) {
    RFormula f;
    f.kind = Kind::Exists;
    f.block_begin = begin;
    f.block_end = end;
    f.children = {std::move(body)};
    return f;
  }
};

enum class Fragment { EXISTENTIAL, FULL, EXISTENTIAL_LOG, FULL_LOG };
enum class CompileMode { SAT, CHECK };

inline const char* fragment_name(Fragment f) {
  switch (f) {
    case Fragment::EXISTENTIAL: return "EXISTENTIAL";
    case Fragment::FULL: return "FULL";
    case Fragment::EXISTENTIAL_LOG: return "EXISTENTIAL_LOG";
    case Fragment::FULL_LOG: return "FULL_LOG";
  }
  return "?";
}

struct RealVar {
  std::string name;
  std::vector<std::string> team_vars;
  std::vector<std::string> values;  // element names, aligned with team_vars
  bool outer = false;
};

struct CompileStats {
  std::size_t num_vars = 0;
  std::size_t num_products = 0;
  std::size_t num_sums = 0;
  std::size_t depth = 0;
};

struct RealSystem {
  std::vector<RealVar> vars;
  RFormula body;
  Fragment fragment = Fragment::EXISTENTIAL;
  CompileMode mode = CompileMode::SAT;
  CompileStats stats;
  bool source_bool_neg = false;  // the source formula used Boolean negation
};

namespace detail {

// One weight expression per assignment tuple of the current team variables,
// in the lexicographic row order of all_tuples.
struct WeightLayer {
  std::vector<std::string> vars;
  std::vector<Tuple> rows;
  std::vector<RTerm> cells;
};

struct RealCompiler {
  const Structure& A;
  std::vector<RealVar> vars;
  int next_block = 0;

  std::string cell_name(const std::string& base, const Tuple& row) {
    std::string n = base;
    for (Elem e : row) n += "_" + A.elem_name(e);
    return n;
  }

  std::size_t add_var(const std::string& base, const std::vector<std::string>& tvars,
                      const Tuple& row, bool outer) {
    RealVar v;
    v.name = cell_name(base, row);
    v.team_vars = tvars;
    for (Elem e : row) v.values.push_back(A.elem_name(e));
    v.outer = outer;
    vars.push_back(std::move(v));
    return vars.size() - 1;
  }

  WeightLayer fresh_layer(const std::string& base, std::vector<std::string> tvars,
                          bool outer) {
    WeightLayer L;
    L.vars = std::move(tvars);
    L.rows = all_tuples(A.size(), L.vars.size());
    for (const auto& row : L.rows)
      L.cells.push_back(RTerm::variable(add_var(base, L.vars, row, outer)));
    return L;
  }

  static RTerm layer_total(const WeightLayer& L) { return RTerm::sum(L.cells); }

  std::vector<RFormula> nonneg(const WeightLayer& L) {
    std::vector<RFormula> out;
    for (const auto& c : L.cells) out.push_back(RFormula::le(RTerm::constant(0), c));
    return out;
  }

  // Sum of the cells whose row agrees with the assignment u on its domain.
  RTerm marginal_at(const WeightLayer& L, const std::map<std::string, Elem>& u) {
    VarIndex idx(L.vars);
    std::vector<RTerm> parts;
    for (std::size_t i = 0; i < L.rows.size(); ++i) {
      bool match = true;
      for (const auto& [v, e] : u)
        if (L.rows[i][idx.at(v)] != e) {
          match = false;
          break;
        }
      if (match) parts.push_back(L.cells[i]);
    }
    return RTerm::sum(std::move(parts));
  }

  // Sum of the cells whose row takes the value tuple vals on the positions
  // of the variable tuple tvs, respecting repetitions positionally.
  RTerm positional_marginal(const WeightLayer& L, const std::vector<std::string>& tvs,
                            const Tuple& vals) {
    VarIndex idx(L.vars);
    std::vector<RTerm> parts;
    for (std::size_t i = 0; i < L.rows.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; j < tvs.size(); ++j)
        if (L.rows[i][idx.at(tvs[j])] != vals[j]) {
          match = false;
          break;
        }
      if (match) parts.push_back(L.cells[i]);
    }
    return RTerm::sum(std::move(parts));
  }

  static std::vector<std::string> distinct_in_order(
      const std::vector<std::vector<std::string>>& tuples) {
    std::vector<std::string> out;
    for (const auto& t : tuples)
      for (const auto& v : t)
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    return out;
  }

  RFormula star(const FormulaPtr& f, const WeightLayer& L) {
    switch (f->kind) {
      case FKind::RelAtom:
      case FKind::Eq: {
        VarIndex idx(L.vars);
        std::vector<RFormula> zero;
        for (std::size_t i = 0; i < L.rows.size(); ++i)
          if (!row_satisfies_literal(A, *f, L.rows[i], idx))
            zero.push_back(RFormula::eq(L.cells[i], RTerm::constant(0)));
        return RFormula::conj(std::move(zero));
      }
      case FKind::Indep: {
        auto xy = f->t0;
        xy.insert(xy.end(), f->t1.begin(), f->t1.end());
        auto xz = f->t0;
        xz.insert(xz.end(), f->t2.begin(), f->t2.end());
        auto xyz = xy;
        xyz.insert(xyz.end(), f->t2.begin(), f->t2.end());
        auto dom = distinct_in_order({f->t0, f->t1, f->t2});
        auto restrict_u = [](const std::map<std::string, Elem>& u,
                             const std::vector<std::string>& tvs) {
          std::map<std::string, Elem> r;
          for (const auto& v : tvs) r[v] = u.at(v);
          return r;
        };
        std::vector<RFormula> eqs;
        for (const auto& vals : all_tuples(A.size(), dom.size())) {
          std::map<std::string, Elem> u;
          for (std::size_t j = 0; j < dom.size(); ++j) u[dom[j]] = vals[j];
          RTerm lhs = RTerm::prod(marginal_at(L, restrict_u(u, xy)),
                                  marginal_at(L, restrict_u(u, xz)));
          RTerm rhs = RTerm::prod(marginal_at(L, restrict_u(u, xyz)),
                                  marginal_at(L, restrict_u(u, f->t0)));
          eqs.push_back(RFormula::eq(std::move(lhs), std::move(rhs)));
        }
        return RFormula::conj(std::move(eqs));
      }
      case FKind::Marg: {
        std::vector<RFormula> eqs;
        for (const auto& vals : all_tuples(A.size(), f->t0.size()))
          eqs.push_back(RFormula::eq(positional_marginal(L, f->t0, vals),
                                     positional_marginal(L, f->t1, vals)));
        return RFormula::conj(std::move(eqs));
      }
      case FKind::EntropyEq:
        return RFormula::eq(entropy_sum(L, f->t0), entropy_sum(L, f->t1));
      case FKind::BoolNeg:
        return RFormula::negate(star(f->a, L));
      case FKind::And:
        return RFormula::conj({star(f->a, L), star(f->b, L)});
      case FKind::SplitOr: {
        int id = ++next_block;
        std::size_t begin = vars.size();
        WeightLayer T = fresh_layer("t" + std::to_string(id), L.vars, false);
        WeightLayer R = fresh_layer("r" + std::to_string(id), L.vars, false);
        std::vector<RFormula> parts;
        for (std::size_t i = 0; i < L.rows.size(); ++i) {
          parts.push_back(RFormula::le(RTerm::constant(0), T.cells[i]));
          parts.push_back(RFormula::le(RTerm::constant(0), R.cells[i]));
          parts.push_back(
              RFormula::eq(L.cells[i], RTerm::sum({T.cells[i], R.cells[i]})));
        }
        parts.push_back(star(f->a, T));
        parts.push_back(star(f->b, R));
        return RFormula::block(begin, vars.size(), RFormula::conj(std::move(parts)));
      }
      case FKind::Exists:
      case FKind::Forall: {
        int id = ++next_block;
        std::vector<std::string> evars = L.vars;
        if (std::find(evars.begin(), evars.end(), f->var) == evars.end())
          evars.push_back(f->var);
        std::sort(evars.begin(), evars.end());
        std::size_t begin = vars.size();
        WeightLayer T = fresh_layer("t" + std::to_string(id), evars, false);
        std::vector<RFormula> parts = nonneg(T);

        // The new table must project back to the old one over the variables
        // other than the quantified one.
        std::vector<std::string> keep;
        for (const auto& v : L.vars)
          if (v != f->var) keep.push_back(v);
        for (const auto& base : all_tuples(A.size(), keep.size())) {
          std::map<std::string, Elem> u;
          for (std::size_t j = 0; j < keep.size(); ++j) u[keep[j]] = base[j];
          parts.push_back(RFormula::eq(marginal_at(L, u), marginal_at(T, u)));
        }
        if (f->kind == FKind::Forall) {
          VarIndex tidx(T.vars);
          std::size_t xp = tidx.at(f->var);
          for (std::size_t i = 0; i < T.rows.size(); ++i)
            for (std::size_t j = i + 1; j < T.rows.size(); ++j) {
              bool slice = T.rows[i][xp] < T.rows[j][xp];
              for (std::size_t p = 0; p < T.rows[i].size() && slice; ++p)
                if (p != xp && T.rows[i][p] != T.rows[j][p]) slice = false;
              if (slice) parts.push_back(RFormula::eq(T.cells[i], T.cells[j]));
            }
        }
        parts.push_back(star(f->a, T));
        return RFormula::block(begin, vars.size(), RFormula::conj(std::move(parts)));
      }
      default:
        fail(ErrorKind::Unsupported,
             "weight-comparison formulas have no real-arithmetic compilation; "
             "use the comparison evaluator");
    }
  }

  RTerm entropy_sum(const WeightLayer& L, const std::vector<std::string>& tvs) {
    std::vector<RTerm> terms;
    for (const auto& vals : all_tuples(A.size(), tvs.size())) {
      RTerm m = positional_marginal(L, tvs, vals);
      if (m.args.empty()) continue;
      terms.push_back(RTerm::prod(m, RTerm::log_of(m)));
    }
    return RTerm::sum(std::move(terms));
  }
};

inline bool rformula_has(const RFormula& f, RFormula::Kind k) {
  if (f.kind == k) return true;
  for (const auto& c : f.children)
    if (rformula_has(c, k)) return true;
  return false;
}

inline bool rterm_has_log(const RTerm& t) {
  if (t.kind == RTerm::Kind::Log) return true;
  for (const auto& a : t.args)
    if (rterm_has_log(a)) return true;
  return false;
}

inline bool rformula_has_log(const RFormula& f) {
  if (rterm_has_log(f.lhs) || rterm_has_log(f.rhs)) return true;
  for (const auto& c : f.children)
    if (rformula_has_log(c)) return true;
  return false;
}

inline bool atomic_r(const RFormula& f) {
  return f.kind == RFormula::Kind::Le || f.kind == RFormula::Kind::Eq;
}

inline bool not_only_over_atoms(const RFormula& f) {
  if (f.kind == RFormula::Kind::Not && !atomic_r(f.children[0])) return false;
  for (const auto& c : f.children)
    if (!not_only_over_atoms(c)) return false;
  return true;
}

inline void term_stats(const RTerm& t, CompileStats& s) {
  if (t.kind == RTerm::Kind::Sum) ++s.num_sums;
  if (t.kind == RTerm::Kind::Prod) ++s.num_products;
  for (const auto& a : t.args) term_stats(a, s);
}

inline std::size_t formula_stats(const RFormula& f, CompileStats& s) {
  term_stats(f.lhs, s);
  term_stats(f.rhs, s);
  std::size_t d = 0;
  for (const auto& c : f.children) d = std::max(d, formula_stats(c, s));
  return d + 1;
}

}  // namespace detail

inline Fragment classify(const RealSystem& sys) {
  bool log = detail::rformula_has_log(sys.body);
  bool existential = !sys.source_bool_neg && detail::not_only_over_atoms(sys.body);
  if (existential) return log ? Fragment::EXISTENTIAL_LOG : Fragment::EXISTENTIAL;
  return log ? Fragment::FULL_LOG : Fragment::FULL;
}

// Compiles satisfiability (SAT) or model checking (CHECK) of a team-logic
// formula into a real-arithmetic sentence: one weight variable per
// assignment of the free variables, with functional-dependence atoms first
// rewritten into conditional independence.
inline RealSystem compile(const Structure& A, const FormulaPtr& formula,
                          CompileMode mode, const WeightedTeam* X = nullptr) {
  Dialect d = dialect_of(formula);
  if (d == Dialect::FOPT)
    fail(ErrorKind::Unsupported,
         "weight-comparison formulas have no real-arithmetic compilation; use "
         "the comparison evaluator");
  FormulaPtr f = rewrite_dep_to_indep(formula);

  auto fvset = free_vars(f);
  std::vector<std::string> fv(fvset.begin(), fvset.end());

  detail::RealCompiler rc{A};
  RealSystem sys;
  sys.mode = mode;
  sys.source_bool_neg = d == Dialect::FO_ATOMS_NEG;

  detail::WeightLayer outer;
  std::vector<RFormula> parts;
  if (mode == CompileMode::SAT) {
    outer = rc.fresh_layer("s", fv, true);
    for (auto& c : rc.nonneg(outer)) parts.push_back(std::move(c));
  } else {
    WeightedTeam unit = unit_empty_team();
    if (!X) {
      if (!fv.empty())
        fail(ErrorKind::BadInput, "model checking an open formula needs a team");
      X = &unit;
    }
    if (X->vars != fv)
      fail(ErrorKind::BadInput,
           "team variables do not match the free variables of the formula");
    if (X->total_weight() == 0)
      fail(ErrorKind::EmptyTeam,
           "cannot compile a zero-weight team: the system asserts a nonempty "
           "weight sum");
    outer.vars = fv;
    outer.rows = all_tuples(A.size(), fv.size());
    for (const auto& row : outer.rows) {
      Rat w = 0;
      for (const auto& r : X->rows)
        if (r.tuple == row) {
          w = r.weight;
          break;
        }
      outer.cells.push_back(RTerm::constant(w));
    }
    for (const auto& c : outer.cells)
      parts.push_back(RFormula::le(RTerm::constant(0), c));
  }
  parts.push_back(RFormula::negate(
      RFormula::eq(RTerm::constant(0), detail::RealCompiler::layer_total(outer))));
  parts.push_back(rc.star(f, outer));

  RFormula body = RFormula::conj(std::move(parts));
  if (mode == CompileMode::SAT)
    body = RFormula::block(0, outer.cells.size(), std::move(body));

  sys.vars = std::move(rc.vars);
  sys.body = std::move(body);
  sys.fragment = classify(sys);
  sys.stats.num_vars = sys.vars.size();
  sys.stats.depth = detail::formula_stats(sys.body, sys.stats);
  return sys;
}

namespace detail {

inline void emit_rat(std::ostream& os, const Rat& r) {
  if (denominator(r) == 1) {
    os << numerator(r);
  } else {
    os << "(/ " << numerator(r) << " " << denominator(r) << ")";
  }
}

inline void emit_term(std::ostream& os, const RealSystem& sys, const RTerm& t) {
  switch (t.kind) {
    case RTerm::Kind::Var:
      os << sys.vars[t.var].name;
      return;
    case RTerm::Kind::Const:
      emit_rat(os, t.value);
      return;
    case RTerm::Kind::Sum:
      if (t.args.empty()) {
        os << "0";
        return;
      }
      if (t.args.size() == 1) {
        emit_term(os, sys, t.args[0]);
        return;
      }
      os << "(+";
      for (const auto& a : t.args) {
        os << " ";
        emit_term(os, sys, a);
      }
      os << ")";
      return;
    case RTerm::Kind::Prod:
      os << "(*";
      for (const auto& a : t.args) {
        os << " ";
        emit_term(os, sys, a);
      }
      os << ")";
      return;
    case RTerm::Kind::Log:
      fail(ErrorKind::LogUnsupported,
           "entropy constraints use log, which SMT-LIB2 nonlinear real "
           "arithmetic lacks; use the numeric solver");
  }
}

inline void emit_formula(std::ostream& os, const RealSystem& sys, const RFormula& f,
                         bool lower_blocks) {
  switch (f.kind) {
    case RFormula::Kind::Le:
      os << "(<= ";
      emit_term(os, sys, f.lhs);
      os << " ";
      emit_term(os, sys, f.rhs);
      os << ")";
      return;
    case RFormula::Kind::Eq:
      os << "(= ";
      emit_term(os, sys, f.lhs);
      os << " ";
      emit_term(os, sys, f.rhs);
      os << ")";
      return;
    case RFormula::Kind::Not:
      os << "(not ";
      emit_formula(os, sys, f.children[0], false);
      os << ")";
      return;
    case RFormula::Kind::And:
      if (f.children.empty()) {
        os << "true";
        return;
      }
      if (f.children.size() == 1) {
        emit_formula(os, sys, f.children[0], lower_blocks);
        return;
      }
      os << "(and";
      for (const auto& c : f.children) {
        os << " ";
        emit_formula(os, sys, c, lower_blocks);
      }
      os << ")";
      return;
    case RFormula::Kind::Exists:
      if (lower_blocks) {
        emit_formula(os, sys, f.children[0], true);
        return;
      }
      os << "(exists (";
      for (std::size_t i = f.block_begin; i < f.block_end; ++i) {
        if (i > f.block_begin) os << " ";
        os << "(" << sys.vars[i].name << " Real)";
      }
      os << ") ";
      emit_formula(os, sys, f.children[0], false);
      os << ")";
      return;
  }
}

}  // namespace detail

// Renders the system as an SMT-LIB2 script. Existential systems become
// quantifier-free: every block is lowered to top-level declarations.
inline std::string emit_smtlib2(const RealSystem& sys) {
  Fragment fr = sys.fragment;
  if (fr == Fragment::EXISTENTIAL_LOG || fr == Fragment::FULL_LOG)
    fail(ErrorKind::LogUnsupported,
         "entropy constraints use log, which SMT-LIB2 nonlinear real "
         "arithmetic lacks; use the numeric solver");
  bool existential = fr == Fragment::EXISTENTIAL;
  std::ostringstream os;
  os << "(set-logic " << (existential ? "QF_NRA" : "NRA") << ")\n";

  const RFormula* body = &sys.body;
  if (existential) {
    for (const auto& v : sys.vars) os << "(declare-const " << v.name << " Real)\n";
  } else {
    while (body->kind == RFormula::Kind::Exists) {
      for (std::size_t i = body->block_begin; i < body->block_end; ++i)
        os << "(declare-const " << sys.vars[i].name << " Real)\n";
      body = &body->children[0];
    }
  }
  os << "(assert ";
  detail::emit_formula(os, sys, *body, existential);
  os << ")\n(check-sat)\n";
  if (existential) os << "(get-model)\n";
  return os.str();
}

namespace detail {

inline std::optional<Rat> fold_term(const RTerm& t) {
  switch (t.kind) {
    case RTerm::Kind::Var:
    case RTerm::Kind::Log:
      return std::nullopt;
    case RTerm::Kind::Const:
      return t.value;
    case RTerm::Kind::Sum: {
      Rat acc = 0;
      for (const auto& a : t.args) {
        auto v = fold_term(a);
        if (!v) return std::nullopt;
        acc += *v;
      }
      return acc;
    }
    case RTerm::Kind::Prod: {
      Rat acc = 1;
      for (const auto& a : t.args) {
        auto v = fold_term(a);
        if (!v) return std::nullopt;
        acc *= *v;
      }
      return acc;
    }
  }
  return std::nullopt;
}

inline std::optional<bool> fold_formula(const RFormula& f) {
  switch (f.kind) {
    case RFormula::Kind::Le: {
      auto l = fold_term(f.lhs), r = fold_term(f.rhs);
      if (!l || !r) return std::nullopt;
      return *l <= *r;
    }
    case RFormula::Kind::Eq: {
      auto l = fold_term(f.lhs), r = fold_term(f.rhs);
      if (!l || !r) return std::nullopt;
      return *l == *r;
    }
    case RFormula::Kind::Not: {
      auto v = fold_formula(f.children[0]);
      if (!v) return std::nullopt;
      return !*v;
    }
    case RFormula::Kind::And: {
      for (const auto& c : f.children) {
        auto v = fold_formula(c);
        if (!v) return std::nullopt;
        if (!*v) return false;
      }
      return true;
    }
    case RFormula::Kind::Exists:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

// Exact truth value of a system whose body contains no real variables and
// no log (possible for CHECK-mode compilations of search-free formulas).
inline std::optional<bool> eval_ground(const RealSystem& sys) {
  return detail::fold_formula(sys.body);
}

inline Json compile_stats_json(const RealSystem& sys) {
  Json j;
  j["fragment"] = fragment_name(sys.fragment);
  j["mode"] = sys.mode == CompileMode::SAT ? "sat" : "check";
  j["num_vars"] = sys.stats.num_vars;
  j["num_products"] = sys.stats.num_products;
  j["num_sums"] = sys.stats.num_sums;
  j["depth"] = sys.stats.depth;
  Json vars = Json::object();
  for (const auto& v : sys.vars) {
    Json e;
    e["vars"] = v.team_vars;
    e["values"] = v.values;
    e["outer"] = v.outer;
    vars[v.name] = e;
  }
  j["vars"] = vars;
  return j;
}

}  // namespace ptl
