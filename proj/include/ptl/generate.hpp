#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ptl/dialect.hpp"
#include "ptl/formula.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"

namespace ptl {

// Random instances and formulas for property suites and the gen command.
// All draws go through one seeded engine so runs are reproducible.
using Rng = std::mt19937_64;

struct GenOptions {
  std::size_t max_domain = 4;
  int max_depth = 5;
  std::size_t max_support = 12;
  unsigned max_den = 12;
};

namespace gen_detail {

inline std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool coin(Rng& rng) { return rng() & 1; }

}  // namespace gen_detail

inline Structure gen_structure(Rng& rng, const GenOptions& opt = {}) {
  using gen_detail::pick;
  Structure A;
  static const char* names[] = {"a", "b", "c", "d", "e", "f"};
  std::size_t n = 2 + pick(rng, opt.max_domain - 1);
  for (std::size_t i = 0; i < n; ++i) A.domain.push_back(names[i]);
  Relation R{1, {}};
  for (Elem e = 0; e < n; ++e)
    if (gen_detail::coin(rng)) R.tuples.insert({e});
  Relation S{2, {}};
  for (Elem e = 0; e < n; ++e)
    for (Elem g = 0; g < n; ++g)
      if (gen_detail::coin(rng)) S.tuples.insert({e, g});
  A.relations["R"] = std::move(R);
  A.relations["S"] = std::move(S);
  A.constants["zero"] = 0;
  A.constants["one"] = 1;
  A.validate();
  return A;
}

// A normalized team: a random support with weights c_i / q for a common
// denominator q <= max_den, every c_i >= 1. Support size is capped by q,
// which keeps every weight's reduced denominator within the bound.
inline WeightedTeam gen_team(Rng& rng, const Structure& A,
                             std::vector<std::string> vars,
                             const GenOptions& opt = {}) {
  using gen_detail::pick;
  auto tuples = all_tuples(A.size(), vars.size());
  std::shuffle(tuples.begin(), tuples.end(), rng);
  unsigned q = 1 + static_cast<unsigned>(pick(rng, opt.max_den));
  std::size_t m = 1 + pick(rng, std::min({opt.max_support, tuples.size(),
                                          static_cast<std::size_t>(q)}));
  std::vector<unsigned> counts(m, 1);
  for (unsigned extra = q - static_cast<unsigned>(m); extra > 0; --extra)
    ++counts[pick(rng, m)];
  std::vector<Row> rows;
  for (std::size_t i = 0; i < m; ++i)
    rows.push_back(Row{tuples[i], Rat(counts[i], q)});
  return make_team(std::move(vars), std::move(rows));
}

// A team with arbitrary positive weights, not necessarily summing to one.
inline WeightedTeam gen_weighted_team(Rng& rng, const Structure& A,
                                      std::vector<std::string> vars,
                                      const GenOptions& opt = {}) {
  using gen_detail::pick;
  auto tuples = all_tuples(A.size(), vars.size());
  std::shuffle(tuples.begin(), tuples.end(), rng);
  std::size_t m = 1 + pick(rng, std::min(opt.max_support, tuples.size()));
  std::vector<Row> rows;
  for (std::size_t i = 0; i < m; ++i) {
    unsigned num = 1 + static_cast<unsigned>(pick(rng, opt.max_den));
    unsigned den = 1 + static_cast<unsigned>(pick(rng, opt.max_den));
    rows.push_back(Row{tuples[i], Rat(num, den)});
  }
  return make_team(std::move(vars), std::move(rows));
}

inline Term gen_term(Rng& rng, const std::vector<std::string>& vars) {
  using gen_detail::pick;
  if (pick(rng, 6) == 0) return Term::cons(gen_detail::coin(rng) ? "zero" : "one");
  return Term::var(vars[pick(rng, vars.size())]);
}

inline CondPtr gen_condition(Rng& rng, const std::vector<std::string>& vars,
                             int depth) {
  using gen_detail::pick;
  if (depth <= 0 || pick(rng, 3) == 0) {
    switch (pick(rng, 3)) {
      case 0:
        return Cond::make_rel("R", {gen_term(rng, vars)});
      case 1:
        return Cond::make_rel("S", {gen_term(rng, vars), gen_term(rng, vars)});
      default:
        return Cond::make_eq(gen_term(rng, vars), gen_term(rng, vars));
    }
  }
  if (pick(rng, 3) == 0)
    return Cond::make_not(gen_condition(rng, vars, depth - 1));
  return Cond::make_and(gen_condition(rng, vars, depth - 1),
                        gen_condition(rng, vars, depth - 1));
}

inline FormulaPtr gen_literal(Rng& rng, const std::vector<std::string>& vars) {
  using gen_detail::pick;
  bool neg = gen_detail::coin(rng);
  switch (pick(rng, 3)) {
    case 0:
      return Formula::rel_atom("R", {gen_term(rng, vars)}, neg);
    case 1:
      return Formula::rel_atom("S", {gen_term(rng, vars), gen_term(rng, vars)}, neg);
    default:
      return Formula::eq(gen_term(rng, vars), gen_term(rng, vars), neg);
  }
}

namespace gen_detail {

inline std::string quant_var(Rng& rng, std::vector<std::string>& vars) {
  static const char* pool[] = {"x", "y", "z", "u", "v", "w"};
  std::string v = pool[pick(rng, 6)];
  if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  return v;
}

}  // namespace gen_detail

// A formula of the weight-comparison dialect.
inline FormulaPtr gen_fopt_formula(Rng& rng, std::vector<std::string> vars,
                                   int depth) {
  using gen_detail::pick;
  if (vars.empty()) {
    std::string v = gen_detail::quant_var(rng, vars);
    return Formula::quant(gen_detail::coin(rng) ? FKind::Exists1 : FKind::Forall1, v,
                          gen_fopt_formula(rng, vars, depth - 1));
  }
  if (depth <= 0) return gen_literal(rng, vars);
  switch (pick(rng, 7)) {
    case 0:
      return gen_literal(rng, vars);
    case 1: {
      auto d0 = gen_condition(rng, vars, 1);
      auto d1 = gen_condition(rng, vars, 1);
      auto d2 = gen_condition(rng, vars, 1);
      auto d3 = gen_condition(rng, vars, 1);
      return Formula::cmp(d0, d1, d2, d3);
    }
    case 2:
      return Formula::binary(FKind::And, gen_fopt_formula(rng, vars, depth - 1),
                             gen_fopt_formula(rng, vars, depth - 1));
    case 3:
      return Formula::binary(FKind::GlobalOr, gen_fopt_formula(rng, vars, depth - 1),
                             gen_fopt_formula(rng, vars, depth - 1));
    case 4:
      return Formula::unary(FKind::DotNeg, gen_fopt_formula(rng, vars, depth - 1));
    default: {
      std::string v = gen_detail::quant_var(rng, vars);
      return Formula::quant(pick(rng, 2) ? FKind::Exists1 : FKind::Forall1, v,
                            gen_fopt_formula(rng, vars, depth - 1));
    }
  }
}

// A classical first-order formula: literals, conjunction, split disjunction
// and unbounded quantifiers.
inline FormulaPtr gen_fo_formula(Rng& rng, std::vector<std::string> vars, int depth) {
  using gen_detail::pick;
  if (vars.empty() || depth <= 0) {
    if (vars.empty()) {
      std::string v = gen_detail::quant_var(rng, vars);
      return Formula::quant(gen_detail::coin(rng) ? FKind::Exists : FKind::Forall, v,
                            gen_fo_formula(rng, vars, depth - 1));
    }
    return gen_literal(rng, vars);
  }
  switch (pick(rng, 6)) {
    case 0:
    case 1:
      return gen_literal(rng, vars);
    case 2:
      return Formula::binary(FKind::And, gen_fo_formula(rng, vars, depth - 1),
                             gen_fo_formula(rng, vars, depth - 1));
    case 3:
      return Formula::binary(FKind::SplitOr, gen_fo_formula(rng, vars, depth - 1),
                             gen_fo_formula(rng, vars, depth - 1));
    default: {
      std::string v = gen_detail::quant_var(rng, vars);
      return Formula::quant(pick(rng, 2) ? FKind::Exists : FKind::Forall, v,
                            gen_fo_formula(rng, vars, depth - 1));
    }
  }
}

inline std::vector<std::string> gen_subtuple(Rng& rng,
                                             const std::vector<std::string>& vars,
                                             std::size_t min_len) {
  using gen_detail::pick;
  std::vector<std::string> out;
  std::size_t len = min_len + pick(rng, 3);
  for (std::size_t i = 0; i < len; ++i) out.push_back(vars[pick(rng, vars.size())]);
  if (out.size() < min_len) out.push_back(vars[0]);
  return out;
}

inline FormulaPtr gen_team_atom(Rng& rng, const std::vector<std::string>& vars,
                                bool allow_entropy = true) {
  using gen_detail::pick;
  switch (pick(rng, allow_entropy ? 5 : 4)) {
    case 0:
      return Formula::indep(gen_subtuple(rng, vars, 0), gen_subtuple(rng, vars, 1),
                            gen_subtuple(rng, vars, 1));
    case 1:
      return Formula::dep(gen_subtuple(rng, vars, 1), gen_subtuple(rng, vars, 1));
    case 2: {
      auto lhs = gen_subtuple(rng, vars, 1);
      auto rhs = gen_subtuple(rng, vars, 1);
      rhs.resize(lhs.size(), vars[pick(rng, vars.size())]);
      return Formula::marg(lhs, rhs);
    }
    case 3:
      return Formula::indep({}, gen_subtuple(rng, vars, 1), gen_subtuple(rng, vars, 1));
    default:
      return Formula::entropy_eq(gen_subtuple(rng, vars, 1), gen_subtuple(rng, vars, 1));
  }
}

// A formula the exact team evaluator accepts: atoms, literals, conjunction,
// Boolean negation and universal quantification.
inline FormulaPtr gen_searchfree_formula(Rng& rng, std::vector<std::string> vars,
                                         int depth, bool allow_entropy = true) {
  using gen_detail::pick;
  if (depth <= 0 || pick(rng, 3) == 0) {
    if (pick(rng, 2) == 0) return gen_literal(rng, vars);
    return gen_team_atom(rng, vars, allow_entropy);
  }
  switch (pick(rng, 4)) {
    case 0:
      return Formula::binary(FKind::And, gen_searchfree_formula(rng, vars, depth - 1, allow_entropy),
                             gen_searchfree_formula(rng, vars, depth - 1, allow_entropy));
    case 1:
      return Formula::unary(FKind::BoolNeg,
                            gen_searchfree_formula(rng, vars, depth - 1, allow_entropy));
    case 2: {
      std::string v = gen_detail::quant_var(rng, vars);
      return Formula::quant(FKind::Forall, v,
                            gen_searchfree_formula(rng, vars, depth - 1, allow_entropy));
    }
    default:
      return Formula::binary(FKind::And, gen_searchfree_formula(rng, vars, depth - 1, allow_entropy),
                             gen_literal(rng, vars));
  }
}

// A team-logic formula that may need search: adds split disjunction and
// existential quantification to the search-free fragment.
inline FormulaPtr gen_search_formula(Rng& rng, std::vector<std::string> vars,
                                     int depth, bool allow_neg = true) {
  using gen_detail::pick;
  if (depth <= 0 || pick(rng, 4) == 0) {
    if (pick(rng, 2) == 0) return gen_literal(rng, vars);
    return gen_team_atom(rng, vars, false);
  }
  switch (pick(rng, allow_neg ? 6 : 5)) {
    case 0:
      return Formula::binary(FKind::And, gen_search_formula(rng, vars, depth - 1, allow_neg),
                             gen_search_formula(rng, vars, depth - 1, allow_neg));
    case 1:
      return Formula::binary(FKind::SplitOr, gen_search_formula(rng, vars, depth - 1, allow_neg),
                             gen_search_formula(rng, vars, depth - 1, allow_neg));
    case 2: {
      std::string v = gen_detail::quant_var(rng, vars);
      return Formula::quant(FKind::Exists, v,
                            gen_search_formula(rng, vars, depth - 1, allow_neg));
    }
    case 3: {
      std::string v = gen_detail::quant_var(rng, vars);
      return Formula::quant(FKind::Forall, v,
                            gen_search_formula(rng, vars, depth - 1, allow_neg));
    }
    case 4:
      return gen_team_atom(rng, vars, false);
    default:
      return Formula::unary(FKind::BoolNeg,
                            gen_search_formula(rng, vars, depth - 1, allow_neg));
  }
}

}  // namespace ptl
