#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptl/errors.hpp"

namespace ptl {

// Domain elements are indices into Structure::domain; the index order is the
// order elements were listed in the input file, and every deterministic
// enumeration in the workbench follows it.
using Elem = std::uint32_t;
using Tuple = std::vector<Elem>;

struct Relation {
  std::size_t arity = 0;
  std::set<Tuple> tuples;

  bool contains(const Tuple& t) const { return tuples.count(t) > 0; }
};

// A finite relational structure with named constants. Constants named
// "zero" and "one" act as the two designated distinct elements required by
// the entropy rewrite and the disjunction translation.
struct Structure {
  std::vector<std::string> domain;
  std::map<std::string, Relation> relations;
  std::map<std::string, Elem> constants;

  std::size_t size() const { return domain.size(); }

  Elem elem(const std::string& name) const {
    for (Elem i = 0; i < domain.size(); ++i)
      if (domain[i] == name) return i;
    fail(ErrorKind::BadInput, "element not in domain: " + name);
  }

  const std::string& elem_name(Elem e) const {
    if (e >= domain.size()) fail(ErrorKind::BadInput, "element index out of range");
    return domain[e];
  }

  const Relation& relation(const std::string& name) const {
    auto it = relations.find(name);
    if (it == relations.end())
      fail(ErrorKind::UnknownRelation, "unknown relation: " + name);
    return it->second;
  }

  Elem constant(const std::string& name) const {
    auto it = constants.find(name);
    if (it == constants.end())
      fail(ErrorKind::UnknownConstant, "unknown constant: " + name);
    return it->second;
  }

  bool has_constant(const std::string& name) const {
    return constants.count(name) > 0;
  }

  void validate() const {
    if (domain.empty()) fail(ErrorKind::BadInput, "domain must be nonempty");
    std::set<std::string> seen;
    for (const auto& d : domain)
      if (!seen.insert(d).second)
        fail(ErrorKind::BadInput, "duplicate domain element: " + d);
    for (const auto& [name, rel] : relations) {
      for (const auto& t : rel.tuples) {
        if (t.size() != rel.arity)
          fail(ErrorKind::ArityMismatch, "tuple arity mismatch in relation " + name);
        for (Elem e : t)
          if (e >= domain.size())
            fail(ErrorKind::BadInput, "tuple element out of domain in relation " + name);
      }
    }
    for (const auto& [name, e] : constants)
      if (e >= domain.size())
        fail(ErrorKind::BadInput, "constant out of domain: " + name);
  }
};

// Enumerates all tuples A^k in lexicographic order of element indices.
// k = 0 yields the single empty tuple.
inline std::vector<Tuple> all_tuples(std::size_t domain_size, std::size_t k) {
  std::vector<Tuple> out;
  Tuple cur(k, 0);
  while (true) {
    out.push_back(cur);
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (++cur[i] < domain_size) break;
      cur[i] = 0;
      if (i == 0) return out;
    }
    if (k == 0) return out;
  }
}

}  // namespace ptl
