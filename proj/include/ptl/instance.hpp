#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ptl/errors.hpp"
#include "ptl/structure.hpp"
#include "ptl/team.hpp"

namespace ptl {

using Json = nlohmann::json;

inline Rat weight_from_json(const Json& w) {
  if (w.is_string()) return parse_rat(w.get<std::string>());
  if (w.is_number_unsigned()) return Rat(w.get<std::uint64_t>());
  if (w.is_number_integer()) {
    auto v = w.get<std::int64_t>();
    if (v < 0) fail(ErrorKind::BadInput, "negative weight in team row");
    return Rat(v);
  }
  fail(ErrorKind::BadInput, "weights must be strings like \"1/3\" or \"0.25\"");
}

inline Structure structure_from_json(const Json& j) {
  Structure A;
  if (!j.contains("domain") || !j["domain"].is_array())
    fail(ErrorKind::BadInput, "instance needs a \"domain\" array");
  for (const auto& d : j["domain"]) A.domain.push_back(d.get<std::string>());
  if (j.contains("relations")) {
    for (auto it = j["relations"].begin(); it != j["relations"].end(); ++it) {
      Relation rel;
      rel.arity = it.value().at("arity").get<std::size_t>();
      for (const auto& t : it.value().at("tuples")) {
        Tuple tup;
        for (const auto& e : t) tup.push_back(A.elem(e.get<std::string>()));
        rel.tuples.insert(std::move(tup));
      }
      A.relations[it.key()] = std::move(rel);
    }
  }
  if (j.contains("constants")) {
    for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it)
      A.constants[it.key()] = A.elem(it.value().get<std::string>());
  }
  A.validate();
  return A;
}

inline WeightedTeam team_from_json(const Json& j, const Structure& A) {
  std::vector<std::string> vars;
  for (const auto& v : j.at("vars")) vars.push_back(v.get<std::string>());
  std::vector<Row> rows;
  for (const auto& r : j.at("rows")) {
    Row row;
    for (const auto& e : r.at("t")) row.tuple.push_back(A.elem(e.get<std::string>()));
    row.weight = weight_from_json(r.at("w"));
    rows.push_back(std::move(row));
  }
  return make_team(std::move(vars), std::move(rows));
}

struct Instance {
  Structure structure;
  std::optional<WeightedTeam> team;
};

inline Instance instance_from_json(const Json& j) {
  Instance inst;
  inst.structure = structure_from_json(j);
  if (j.contains("team"))
    inst.team = team_from_json(j["team"], inst.structure);
  return inst;
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::BadInput, "cannot open instance file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::BadInput, std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return instance_from_json(j);
}

inline Json structure_to_json(const Structure& A) {
  Json j;
  j["domain"] = A.domain;
  Json rels = Json::object();
  for (const auto& [name, rel] : A.relations) {
    Json r;
    r["arity"] = rel.arity;
    Json tuples = Json::array();
    for (const auto& t : rel.tuples) {
      Json tup = Json::array();
      for (Elem e : t) tup.push_back(A.elem_name(e));
      tuples.push_back(tup);
    }
    r["tuples"] = tuples;
    rels[name] = r;
  }
  j["relations"] = rels;
  Json consts = Json::object();
  for (const auto& [name, e] : A.constants) consts[name] = A.elem_name(e);
  j["constants"] = consts;
  return j;
}

inline Json team_to_json(const WeightedTeam& X, const Structure& A) {
  Json j;
  j["vars"] = X.vars;
  Json rows = Json::array();
  for (const auto& r : X.rows) {
    Json row;
    Json tup = Json::array();
    for (Elem e : r.tuple) tup.push_back(A.elem_name(e));
    row["t"] = tup;
    row["w"] = rat_to_string(r.weight);
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

inline Json instance_to_json(const Structure& A, const WeightedTeam* X) {
  Json j = structure_to_json(A);
  if (X) j["team"] = team_to_json(*X, A);
  return j;
}

}  // namespace ptl
