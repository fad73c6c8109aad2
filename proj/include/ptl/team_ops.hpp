#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptl/condition.hpp"
#include "ptl/errors.hpp"
#include "ptl/rational.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"

namespace ptl {

inline Tuple project(const Tuple& t, const std::vector<std::size_t>& cols) {
  Tuple out;
  out.reserve(cols.size());
  for (std::size_t c : cols) out.push_back(t[c]);
  return out;
}

// Column indices of the named variables, in the order given.
inline std::vector<std::size_t> column_indices(const WeightedTeam& X,
                                               const std::vector<std::string>& vars) {
  std::vector<std::size_t> cols;
  cols.reserve(vars.size());
  for (const auto& v : vars) cols.push_back(X.var_index(v));
  return cols;
}

// X restricted to the variables in V: each result row weight is the sum of
// the weights of the rows projecting onto it. Result variables keep the
// order they had in X.
inline WeightedTeam restrict_team(const WeightedTeam& X,
                                  const std::vector<std::string>& V) {
  std::set<std::string> keep(V.begin(), V.end());
  for (const auto& v : V) X.var_index(v);
  std::vector<std::string> vars;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < X.vars.size(); ++i) {
    if (keep.count(X.vars[i])) {
      vars.push_back(X.vars[i]);
      cols.push_back(i);
    }
  }
  std::vector<Row> rows;
  rows.reserve(X.rows.size());
  for (const auto& r : X.rows) rows.push_back(Row{project(r.tuple, cols), r.weight});
  return merge_rows(std::move(vars), std::move(rows), X.normalized);
}

// |X_phi|: the total weight of the rows satisfying the condition. The
// condition may only mention team variables (and constants).
inline Rat weight(const Structure& A, const WeightedTeam& X, const CondPtr& phi) {
  for (const auto& v : cond_vars(phi)) X.var_index(v);
  VarIndex idx(X.vars);
  Rat total = 0;
  for (const auto& r : X.rows)
    if (cond_holds(A, phi, r.tuple, idx)) total += r.weight;
  return total;
}

namespace detail {

// Position of x in the result of rebinding x: existing column index, or
// vars.size() when x is fresh (appended last).
inline std::size_t rebind_column(std::vector<std::string>& vars, const std::string& x) {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i] == x) return i;
  vars.push_back(x);
  return vars.size() - 1;
}

inline Tuple with_value(const Tuple& t, std::size_t col, Elem a) {
  Tuple out = t;
  if (col < out.size())
    out[col] = a;
  else
    out.push_back(a);
  return out;
}

}  // namespace detail

// X(B/x): every row is split uniformly across the values in B at column x.
// If x is already bound its column is overwritten, which merges rows that
// agree elsewhere.
inline WeightedTeam duplicate(const WeightedTeam& X, const std::string& x,
                              const std::vector<Elem>& B) {
  if (B.empty()) fail(ErrorKind::BadInput, "duplication set must be nonempty");
  std::set<Elem> dedup(B.begin(), B.end());
  if (dedup.size() != B.size())
    fail(ErrorKind::BadInput, "duplication set has repeated elements");
  std::vector<std::string> vars = X.vars;
  std::size_t col = detail::rebind_column(vars, x);
  Rat share(1, static_cast<unsigned>(B.size()));
  std::vector<Row> rows;
  rows.reserve(X.rows.size() * B.size());
  for (const auto& r : X.rows)
    for (Elem a : B)
      rows.push_back(Row{detail::with_value(r.tuple, col, a), r.weight * share});
  return merge_rows(std::move(vars), std::move(rows), X.normalized);
}

// Distributions over the domain, one per support row, keyed by the row's
// index in the team's canonical order.
using ExtensionMap = std::map<std::size_t, std::vector<Rat>>;

// X(F/x): each support row s is split across the domain with probabilities
// F(s). Every distribution must be exact: nonnegative entries summing to 1.
inline WeightedTeam extend(const WeightedTeam& X, const std::string& x,
                           const ExtensionMap& F, std::size_t domain_size) {
  std::vector<std::string> vars = X.vars;
  std::size_t col = detail::rebind_column(vars, x);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < X.rows.size(); ++i) {
    const Row& r = X.rows[i];
    if (r.weight == 0) continue;
    auto it = F.find(i);
    if (it == F.end())
      fail(ErrorKind::BadInput, "extension missing a distribution for support row " +
                                    std::to_string(i));
    const auto& dist = it->second;
    if (dist.size() != domain_size)
      fail(ErrorKind::BadInput, "extension distribution has wrong length");
    Rat sum = 0;
    for (const auto& p : dist) {
      if (p < 0) fail(ErrorKind::BadInput, "extension distribution has negative entry");
      sum += p;
    }
    if (sum != 1)
      fail(ErrorKind::BadInput, "extension distribution does not sum to 1");
    for (Elem a = 0; a < domain_size; ++a)
      if (dist[a] != 0)
        rows.push_back(Row{detail::with_value(r.tuple, col, a), r.weight * dist[a]});
  }
  return merge_rows(std::move(vars), std::move(rows), X.normalized);
}

// X union_k Y over identical variable lists: each tuple gets weight
// k*X(s) + (1-k)*Y(s), with absent tuples counting as zero. Tuples listed in
// either operand stay listed, even when the mix gives them weight zero.
inline WeightedTeam scaled_union(const WeightedTeam& X, const WeightedTeam& Y,
                                 const Rat& k) {
  if (X.vars != Y.vars)
    fail(ErrorKind::BadInput, "scaled union requires identical variable lists");
  if (k < 0 || k > 1)
    fail(ErrorKind::BadInput, "scale factor must lie in [0,1]");
  std::map<Tuple, Rat> mix;
  for (const auto& r : X.rows) mix[r.tuple] += k * r.weight;
  for (const auto& r : Y.rows) mix[r.tuple] += (1 - k) * r.weight;
  std::vector<Row> rows;
  rows.reserve(mix.size());
  for (auto& [t, w] : mix) rows.push_back(Row{t, w});
  bool hint = X.normalized && Y.normalized;
  return merge_rows(X.vars, std::move(rows), hint);
}

// Marginal of X on the given columns as a tuple -> weight map. Zero-weight
// rows contribute nothing.
inline std::map<Tuple, Rat> marginal_map(const WeightedTeam& X,
                                         const std::vector<std::size_t>& cols) {
  std::map<Tuple, Rat> out;
  for (const auto& r : X.rows) {
    if (r.weight == 0) continue;
    out[project(r.tuple, cols)] += r.weight;
  }
  return out;
}

}  // namespace ptl
