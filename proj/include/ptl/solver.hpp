#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ptl/errors.hpp"
#include "ptl/instance.hpp"
#include "ptl/rational.hpp"
#include "ptl/realc.hpp"

namespace ptl {

enum class SolveStatus { SAT, UNKNOWN };

struct SolveConfig {
  int restarts = 64;
  int max_iters = 150;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  int jobs = 1;
  long denom_cap = 1000000;
  double neq_margin = 0.25;  // search-time slack for strict disequalities
};

struct SolveResult {
  SolveStatus status = SolveStatus::UNKNOWN;
  std::map<std::string, Rat> witness;
  double residual = 0.0;
  std::uint64_t iterations = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
};

struct VerifyResult {
  bool ok = false;
  double residual = 0.0;
  std::string worst;  // description of the worst-violated constraint
};

namespace detail {

// The atomic constraints of an existential system, with block structure and
// conjunctions flattened away.
struct Constraint {
  enum class Kind { Le, Eq, NotEq, NotLe };
  Kind kind;
  RTerm lhs, rhs;
  bool has_log = false;
};

inline void flatten_constraints(const RFormula& f, std::vector<Constraint>& out) {
  switch (f.kind) {
    case RFormula::Kind::Le:
      out.push_back({Constraint::Kind::Le, f.lhs, f.rhs});
      break;
    case RFormula::Kind::Eq:
      out.push_back({Constraint::Kind::Eq, f.lhs, f.rhs});
      break;
    case RFormula::Kind::Not: {
      const RFormula& c = f.children[0];
      if (c.kind == RFormula::Kind::Eq)
        out.push_back({Constraint::Kind::NotEq, c.lhs, c.rhs});
      else if (c.kind == RFormula::Kind::Le)
        out.push_back({Constraint::Kind::NotLe, c.lhs, c.rhs});
      else
        fail(ErrorKind::NonExistentialSystem,
             "negation over a compound constraint needs a quantified decision "
             "procedure; export SMT-LIB2 instead");
      break;
    }
    case RFormula::Kind::And:
    case RFormula::Kind::Exists:
      for (const auto& c : f.children) flatten_constraints(c, out);
      break;
  }
}

inline std::vector<Constraint> system_constraints(const RealSystem& sys) {
  if (sys.fragment == Fragment::FULL || sys.fragment == Fragment::FULL_LOG)
    fail(ErrorKind::NonExistentialSystem,
         "the system has universal structure; export SMT-LIB2 instead");
  std::vector<Constraint> cs;
  flatten_constraints(sys.body, cs);
  for (auto& c : cs)
    c.has_log = rterm_has_log(c.lhs) || rterm_has_log(c.rhs);
  return cs;
}

inline bool rterm_ground(const RTerm& t) {
  if (t.kind == RTerm::Kind::Var) return false;
  for (const auto& a : t.args)
    if (!rterm_ground(a)) return false;
  return true;
}

inline double num_term(const RTerm& t, const std::vector<double>& x) {
  switch (t.kind) {
    case RTerm::Kind::Var:
      return x[t.var];
    case RTerm::Kind::Const:
      return static_cast<double>(t.value);
    case RTerm::Kind::Sum: {
      double s = 0;
      for (const auto& a : t.args) s += num_term(a, x);
      return s;
    }
    case RTerm::Kind::Prod: {
      double p = 1;
      for (const auto& a : t.args) p *= num_term(a, x);
      return p;
    }
    case RTerm::Kind::Log: {
      double v = num_term(t.args[0], x);
      return std::log(std::max(v, 1e-12));
    }
  }
  return 0;
}

inline Rat exact_term(const RTerm& t, const std::vector<Rat>& x) {
  switch (t.kind) {
    case RTerm::Kind::Var:
      return x[t.var];
    case RTerm::Kind::Const:
      return t.value;
    case RTerm::Kind::Sum: {
      Rat s = 0;
      for (const auto& a : t.args) s += exact_term(a, x);
      return s;
    }
    case RTerm::Kind::Prod: {
      Rat p = 1;
      for (const auto& a : t.args) p *= exact_term(a, x);
      return p;
    }
    case RTerm::Kind::Log:
      fail(ErrorKind::LogUnsupported, "log term reached the exact evaluator");
  }
  return 0;
}

// Smooth residual whose zero set is the feasible region (up to the strict
// disequality margin).
inline double constraint_residual(const Constraint& c, const std::vector<double>& x,
                                  double margin) {
  double a = num_term(c.lhs, x);
  double b = num_term(c.rhs, x);
  switch (c.kind) {
    case Constraint::Kind::Le:
      return std::max(0.0, a - b);
    case Constraint::Kind::Eq:
      return a - b;
    case Constraint::Kind::NotEq:
      return std::max(0.0, margin - std::abs(a - b));
    case Constraint::Kind::NotLe:
      return std::max(0.0, b - a + margin);
  }
  return 0;
}

inline double penalty(const std::vector<Constraint>& cs, const std::vector<double>& x,
                      double margin) {
  double p = 0;
  for (const auto& c : cs) {
    double r = constraint_residual(c, x, margin);
    p += r * r;
  }
  return p;
}

// Solves (J^T J + lambda I) d = -J^T r by Gaussian elimination.
inline bool normal_solve(std::vector<std::vector<double>> M, std::vector<double> g,
                         std::vector<double>& d) {
  std::size_t n = g.size();
  d.assign(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    if (std::abs(M[piv][col]) < 1e-14) return false;
    std::swap(M[piv], M[col]);
    std::swap(g[piv], g[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = M[r][col] / M[col][col];
      for (std::size_t k = col; k < n; ++k) M[r][k] -= f * M[col][k];
      g[r] -= f * g[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = g[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= M[i][k] * d[k];
    d[i] = s / M[i][i];
  }
  return true;
}

struct RestartOutcome {
  bool sat = false;
  std::map<std::string, Rat> witness;
  double residual = 0.0;
  std::uint64_t iterations = 0;
};

struct NumericSearch {
  const RealSystem& sys;
  const std::vector<Constraint>& cs;
  SolveConfig cfg;

  std::vector<double> residual_vec(const std::vector<double>& x) const {
    std::vector<double> r(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i)
      r[i] = constraint_residual(cs[i], x, cfg.neq_margin);
    return r;
  }

  // Levenberg-Marquardt with a forward-difference Jacobian.
  std::uint64_t descend(std::vector<double>& x) const {
    std::size_t n = x.size(), m = cs.size();
    double lambda = 1e-3;
    std::uint64_t iters = 0;
    std::vector<double> r = residual_vec(x);
    double p = 0;
    for (double v : r) p += v * v;
    for (int it = 0; it < cfg.max_iters; ++it) {
      ++iters;
      if (p <= cfg.tol * cfg.tol * 1e-2) break;
      std::vector<std::vector<double>> J(m, std::vector<double>(n));
      for (std::size_t j = 0; j < n; ++j) {
        double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        std::vector<double> xh = x;
        xh[j] += h;
        std::vector<double> rh = residual_vec(xh);
        for (std::size_t i = 0; i < m; ++i) J[i][j] = (rh[i] - r[i]) / h;
      }
      std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
      std::vector<double> g(n, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          g[j] += J[i][j] * r[i];
          for (std::size_t k = j; k < n; ++k) M[j][k] += J[i][j] * J[i][k];
        }
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < j; ++k) M[j][k] = M[k][j];

      bool improved = false;
      for (int tries = 0; tries < 16 && !improved; ++tries) {
        auto Ml = M;
        for (std::size_t j = 0; j < n; ++j) Ml[j][j] += lambda;
        std::vector<double> ng(n);
        for (std::size_t j = 0; j < n; ++j) ng[j] = -g[j];
        std::vector<double> d;
        if (normal_solve(Ml, ng, d)) {
          std::vector<double> xn = x;
          for (std::size_t j = 0; j < n; ++j) xn[j] += d[j];
          std::vector<double> rn = residual_vec(xn);
          double pn = 0;
          for (double v : rn) pn += v * v;
          if (pn < p) {
            x = std::move(xn);
            r = std::move(rn);
            p = pn;
            lambda = std::max(lambda / 3.0, 1e-12);
            improved = true;
          }
        }
        if (!improved) lambda *= 4.0;
      }
      if (!improved) break;
    }
    return iters;
  }
};

}  // namespace detail

// Exact re-check of a claimed solution. Polynomial constraints are evaluated
// in rational arithmetic; log-bearing ones in double precision against tol.
inline VerifyResult verify(const RealSystem& sys,
                           const std::map<std::string, Rat>& witness, double tol) {
  auto cs = detail::system_constraints(sys);
  std::vector<Rat> xr(sys.vars.size());
  std::vector<double> xd(sys.vars.size());
  for (std::size_t i = 0; i < sys.vars.size(); ++i) {
    auto it = witness.find(sys.vars[i].name);
    if (it == witness.end())
      fail(ErrorKind::BadInput, "witness misses variable " + sys.vars[i].name);
    xr[i] = it->second;
    xd[i] = static_cast<double>(it->second);
  }
  VerifyResult out;
  out.ok = true;
  for (const auto& c : cs) {
    double viol = 0.0;
    if (c.has_log) {
      double a = detail::num_term(c.lhs, xd);
      double b = detail::num_term(c.rhs, xd);
      switch (c.kind) {
        case detail::Constraint::Kind::Le: viol = std::max(0.0, a - b); break;
        case detail::Constraint::Kind::Eq: viol = std::abs(a - b); break;
        case detail::Constraint::Kind::NotEq:
          viol = std::abs(a - b) > tol ? 0.0 : std::numeric_limits<double>::infinity();
          break;
        case detail::Constraint::Kind::NotLe:
          viol = b < a ? 0.0 : std::numeric_limits<double>::infinity();
          break;
      }
      if (viol > tol) out.ok = false;
    } else {
      Rat a = detail::exact_term(c.lhs, xr);
      Rat b = detail::exact_term(c.rhs, xr);
      switch (c.kind) {
        case detail::Constraint::Kind::Le:
          viol = a <= b ? 0.0 : static_cast<double>(Rat(a - b));
          break;
        case detail::Constraint::Kind::Eq:
          viol = a == b ? 0.0 : std::abs(static_cast<double>(Rat(a - b)));
          break;
        case detail::Constraint::Kind::NotEq:
          viol = a != b ? 0.0 : std::numeric_limits<double>::infinity();
          break;
        case detail::Constraint::Kind::NotLe:
          viol = b < a ? 0.0 : std::numeric_limits<double>::infinity();
          break;
      }
      if (viol > tol) out.ok = false;
    }
    if (viol > out.residual) {
      out.residual = viol;
      if (viol > tol) out.worst = "violated constraint with residual";
    }
  }
  return out;
}

namespace detail {

inline std::optional<RestartOutcome> attempt_restart(const RealSystem& sys,
                                                     const std::vector<Constraint>& cs,
                                                     const SolveConfig& cfg, int index) {
  std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::vector<double> x(sys.vars.size());
  for (auto& v : x) v = uni(rng);
  NumericSearch search{sys, cs, cfg};
  RestartOutcome out;
  out.iterations = search.descend(x);
  double p = penalty(cs, x, cfg.neq_margin);
  if (p > cfg.tol * cfg.tol) return out;

  for (long cap : {64L, 4096L, cfg.denom_cap}) {
    std::map<std::string, Rat> w;
    for (std::size_t i = 0; i < sys.vars.size(); ++i)
      w[sys.vars[i].name] = rationalize(std::max(x[i], 0.0), cap);
    VerifyResult v = verify(sys, w, cfg.tol);
    if (v.ok) {
      out.sat = true;
      out.witness = std::move(w);
      out.residual = v.residual;
      return out;
    }
  }
  return out;
}

}  // namespace detail

// Feasibility search by seeded random restarts with local least-squares
// descent. SAT answers always carry an exactly re-verified witness; the
// method cannot certify unsatisfiability and answers UNKNOWN instead.
inline SolveResult solve(const RealSystem& sys, const SolveConfig& cfg = {}) {
  auto cs = detail::system_constraints(sys);
  SolveResult res;
  res.seed = cfg.seed;

  if (sys.vars.empty()) {
    VerifyResult v = verify(sys, {}, cfg.tol);
    res.status = v.ok ? SolveStatus::SAT : SolveStatus::UNKNOWN;
    res.residual = std::isfinite(v.residual) ? v.residual : 1.0;
    return res;
  }

  int n = cfg.restarts;
  std::vector<std::optional<detail::RestartOutcome>> outcomes(n);
  std::atomic<int> best{n};
  std::atomic<int> next{0};
  int jobs = std::max(1, cfg.jobs);
  auto worker = [&]() {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      if (i > best.load()) continue;
      auto oc = detail::attempt_restart(sys, cs, cfg, i);
      if (oc && oc->sat) {
        int cur = best.load();
        while (i < cur && !best.compare_exchange_weak(cur, i)) {
        }
      }
      outcomes[i] = std::move(oc);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (int i = 0; i < n; ++i) {
    if (!outcomes[i]) continue;
    res.iterations += outcomes[i]->iterations;
    res.restarts = i + 1;
    if (outcomes[i]->sat) {
      res.status = SolveStatus::SAT;
      res.witness = outcomes[i]->witness;
      res.residual = outcomes[i]->residual;
      return res;
    }
  }
  res.restarts = n;
  return res;
}

inline Json solve_result_json(const SolveResult& r) {
  Json j;
  j["status"] = r.status == SolveStatus::SAT ? "sat" : "unknown";
  j["residual"] = r.residual;
  j["iterations"] = r.iterations;
  j["restarts"] = r.restarts;
  j["seed"] = r.seed;
  Json w = Json::object();
  for (const auto& [k, v] : r.witness) w[k] = rat_to_string(v);
  j["witness"] = w;
  return j;
}

}  // namespace ptl
