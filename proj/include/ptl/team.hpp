#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptl/errors.hpp"
#include "ptl/rational.hpp"
#include "ptl/structure.hpp"

namespace ptl {

struct Row {
  Tuple tuple;
  Rat weight;
};

// A weighted team: variables, and rows mapping assignment tuples to exact
// nonnegative weights. Rows are kept sorted lexicographically by tuple and
// tuples are unique; absent tuples carry implicit weight zero. Rows with
// explicit weight zero are allowed (maximal teams list every assignment).
struct WeightedTeam {
  std::vector<std::string> vars;
  std::vector<Row> rows;
  bool normalized = false;

  std::size_t arity() const { return vars.size(); }

  Rat total_weight() const {
    Rat t = 0;
    for (const auto& r : rows) t += r.weight;
    return t;
  }

  bool support_empty() const {
    for (const auto& r : rows)
      if (r.weight != 0) return false;
    return true;
  }

  std::size_t var_index(const std::string& v) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == v) return i;
    fail(ErrorKind::UnknownVariable, "variable not in team: " + v);
  }

  bool has_var(const std::string& v) const {
    return std::find(vars.begin(), vars.end(), v) != vars.end();
  }
};

namespace detail {

inline void sort_rows(std::vector<Row>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.tuple < b.tuple; });
}

}  // namespace detail

// Builds a team in canonical form. Duplicate tuples are rejected; weights
// must be nonnegative. The normalized flag is inferred from the exact sum.
inline WeightedTeam make_team(std::vector<std::string> vars, std::vector<Row> rows) {
  std::set<std::string> seen;
  for (const auto& v : vars)
    if (!seen.insert(v).second)
      fail(ErrorKind::BadInput, "duplicate team variable: " + v);
  for (const auto& r : rows) {
    if (r.tuple.size() != vars.size())
      fail(ErrorKind::ArityMismatch, "row arity does not match team variables");
    if (r.weight < 0) fail(ErrorKind::BadInput, "negative row weight");
  }
  detail::sort_rows(rows);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].tuple == rows[i - 1].tuple)
      fail(ErrorKind::BadInput, "duplicate row tuple in team");
  WeightedTeam t;
  t.vars = std::move(vars);
  t.rows = std::move(rows);
  t.normalized = t.total_weight() == 1;
  return t;
}

// The team over no variables whose only row is the empty assignment with
// weight one. Sentences are checked against it.
inline WeightedTeam unit_empty_team() {
  return make_team({}, {Row{{}, Rat(1)}});
}

// Merges rows with equal tuples, keeping canonical order. Used internally by
// the algebra operations, which may produce colliding tuples.
inline WeightedTeam merge_rows(std::vector<std::string> vars, std::vector<Row> rows,
                               bool normalized_hint) {
  detail::sort_rows(rows);
  std::vector<Row> merged;
  for (auto& r : rows) {
    if (!merged.empty() && merged.back().tuple == r.tuple)
      merged.back().weight += r.weight;
    else
      merged.push_back(std::move(r));
  }
  WeightedTeam t;
  t.vars = std::move(vars);
  t.rows = std::move(merged);
  t.normalized = normalized_hint && t.total_weight() == 1;
  return t;
}

// Rescales weights so they sum to one. Errors on all-zero teams.
inline WeightedTeam normalize(const WeightedTeam& X) {
  Rat total = X.total_weight();
  if (total == 0)
    fail(ErrorKind::EmptyTeam, "cannot normalize a team with zero total weight");
  WeightedTeam out = X;
  for (auto& r : out.rows) r.weight /= total;
  out.normalized = true;
  return out;
}

// Distribution equality: teams over the same variables whose nonzero rows
// coincide. Zero-weight rows are ignored on both sides.
inline bool same_distribution(const WeightedTeam& X, const WeightedTeam& Y) {
  if (X.vars != Y.vars) return false;
  std::map<Tuple, Rat> a, b;
  for (const auto& r : X.rows)
    if (r.weight != 0) a[r.tuple] = r.weight;
  for (const auto& r : Y.rows)
    if (r.weight != 0) b[r.tuple] = r.weight;
  return a == b;
}

}  // namespace ptl
