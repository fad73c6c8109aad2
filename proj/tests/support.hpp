#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <initializer_list>
#include <string>
#include <vector>

#include "ptl/errors.hpp"
#include "ptl/rational.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"

namespace testsupport {

using namespace ptl;

struct ErrorKindIs : Catch::Matchers::MatcherGenericBase {
  ErrorKind expected;
  explicit ErrorKindIs(ErrorKind k) : expected(k) {}
  bool match(const Error& e) const { return e.kind() == expected; }
  std::string describe() const override {
    return std::string("has error kind ") + error_kind_name(expected);
  }
};

inline Structure abc_structure(std::size_t n) {
  Structure A;
  const char* names[] = {"a", "b", "c", "d"};
  for (std::size_t i = 0; i < n; ++i) A.domain.push_back(names[i]);
  if (n >= 2) {
    A.constants["zero"] = 0;
    A.constants["one"] = 1;
  }
  A.validate();
  return A;
}

struct RowSpec {
  std::vector<std::string> elems;
  std::string weight;
};

inline WeightedTeam team_of(const Structure& A, std::vector<std::string> vars,
                            std::vector<RowSpec> rows) {
  std::vector<Row> rs;
  for (const auto& r : rows) {
    Row row;
    for (const auto& e : r.elems) row.tuple.push_back(A.elem(e));
    row.weight = parse_rat(r.weight);
    rs.push_back(row);
  }
  return make_team(std::move(vars), std::move(rs));
}

inline Rat w(const WeightedTeam& X, const Structure& A,
             std::vector<std::string> elems) {
  Tuple t;
  for (const auto& e : elems) t.push_back(A.elem(e));
  for (const auto& r : X.rows)
    if (r.tuple == t) return r.weight;
  return Rat(0);
}

}  // namespace testsupport
