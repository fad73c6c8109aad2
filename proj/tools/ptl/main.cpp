#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ptl/atoms.hpp"
#include "ptl/dialect.hpp"
#include "ptl/fopt.hpp"
#include "ptl/generate.hpp"
#include "ptl/instance.hpp"
#include "ptl/parser.hpp"
#include "ptl/printer.hpp"
#include "ptl/realc.hpp"
#include "ptl/solver.hpp"
#include "ptl/team_ops.hpp"
#include "ptl/teameval.hpp"
#include "ptl/translate.hpp"

namespace {

using namespace ptl;

constexpr int kExitTrue = 0;
constexpr int kExitFalse = 1;
constexpr int kExitError = 2;
constexpr int kExitUnknown = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::BadInput, "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::BadInput, "cannot write file: " + path);
  out << content;
}

Json load_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::BadInput, "invalid JSON in " + path + ": " + e.what());
  }
}

std::vector<std::string> split_vars(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string v;
  while (in >> v) out.push_back(v);
  return out;
}

std::uint64_t env_seed() {
  const char* s = std::getenv("PTL_SEED");
  if (!s || !*s) return 0;
  char* end = nullptr;
  std::uint64_t v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0')
    fail(ErrorKind::BadInput, "PTL_SEED must be an unsigned integer");
  return v;
}

// Every command prints its payload lines first and one machine-readable
// report as the final stdout line.
struct Report {
  Json j = Json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Report(const std::string& command) { j["command"] = command; }

  void emit() {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    j["elapsed_ms"] = ms;
    std::cout << j.dump() << "\n";
  }
};

int verdict_exit(Report& report, bool value) {
  report.j["verdict"] = value ? "TRUE" : "FALSE";
  std::cout << (value ? "TRUE" : "FALSE") << "\n";
  report.emit();
  return value ? kExitTrue : kExitFalse;
}

WeightedTeam team_or_unit(const Instance& inst, const FormulaPtr& f) {
  if (inst.team) return *inst.team;
  if (free_vars(f).empty()) return unit_empty_team();
  fail(ErrorKind::BadInput,
       "the formula has free variables, so the instance needs a team");
}

struct CheckArgs {
  std::string instance_path, formula_path, witness_path;
  unsigned oracle_denom = 0;
  bool via_compile = false;
  std::uint64_t budget = TeamEvalOptions{}.budget;
  SolveConfig solver;
};

int cmd_check(const CheckArgs& a) {
  Report report("check");
  Instance inst = load_instance(a.instance_path);
  FormulaPtr f = parse_formula(read_file(a.formula_path));
  Dialect d = dialect_of(f);
  report.j["dialect"] = dialect_name(d);

  if (d == Dialect::FOPT) {
    WeightedTeam X = team_or_unit(inst, f);
    report.j["route"] = "fopt";
    return verdict_exit(report, eval_fopt(inst.structure, X, f).value);
  }

  WeightedTeam X = team_or_unit(inst, f);
  if (a.witness_path.empty() && a.oracle_denom == 0 && !a.via_compile) {
    try {
      report.j["route"] = "exact";
      return verdict_exit(report, eval_exact(inst.structure, X, f));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SearchRequired) throw;
      fail(ErrorKind::SearchRequired,
           "the formula needs a split or quantifier search; pick a route with "
           "--oracle D, --witness FILE, or --via-compile");
    }
  }
  if (!a.witness_path.empty()) {
    report.j["route"] = "witness";
    Witness w = witness_from_json(load_json(a.witness_path), inst.structure);
    return verdict_exit(report, check_witness(inst.structure, X, f, w));
  }
  if (a.oracle_denom > 0) {
    report.j["route"] = "oracle";
    report.j["denom"] = a.oracle_denom;
    TeamEvalOptions opts;
    opts.budget = a.budget;
    return verdict_exit(
        report, eval_bounded(inst.structure, X, f, Bound{a.oracle_denom}, opts));
  }
  report.j["route"] = "compile";
  auto fvset = free_vars(f);
  std::vector<std::string> fv(fvset.begin(), fvset.end());
  WeightedTeam Xf = fv.empty() ? unit_empty_team() : restrict_team(X, fv);
  RealSystem sys = compile(inst.structure, f, CompileMode::CHECK, &Xf);
  report.j["fragment"] = fragment_name(sys.fragment);
  if (sys.fragment == Fragment::FULL || sys.fragment == Fragment::FULL_LOG)
    fail(ErrorKind::NonExistentialSystem,
         "the compiled system quantifies universally; export it with "
         "`ptl compile --smt2` instead of solving numerically");
  SolveResult res = solve(sys, a.solver);
  report.j["solver"] = solve_result_json(res);
  if (res.status == SolveStatus::SAT) return verdict_exit(report, true);
  report.j["verdict"] = "UNKNOWN";
  std::cout << "UNKNOWN\n";
  report.emit();
  return kExitUnknown;
}

int cmd_oracle(const std::string& instance_path, const std::string& formula_path,
               unsigned denom, std::uint64_t budget) {
  Report report("oracle");
  Instance inst = load_instance(instance_path);
  FormulaPtr f = parse_formula(read_file(formula_path));
  WeightedTeam X = team_or_unit(inst, f);
  TeamEvalOptions opts;
  opts.budget = budget;
  report.j["denom"] = denom;
  return verdict_exit(report,
                      eval_bounded(inst.structure, X, f, Bound{denom}, opts));
}

int cmd_compile(const std::string& instance_path, const std::string& formula_path,
                const std::string& mode, const std::string& smt2_path,
                std::string stats_path) {
  Report report("compile");
  Instance inst = load_instance(instance_path);
  FormulaPtr f = parse_formula(read_file(formula_path));
  CompileMode m = mode == "sat" ? CompileMode::SAT : CompileMode::CHECK;
  const WeightedTeam* X = inst.team ? &*inst.team : nullptr;
  RealSystem sys = compile(inst.structure, f, m, X);
  report.j["mode"] = mode;
  report.j["fragment"] = fragment_name(sys.fragment);
  report.j["stats"] = compile_stats_json(sys);
  if (!smt2_path.empty()) {
    write_file(smt2_path, emit_smtlib2(sys));
    if (stats_path.empty()) stats_path = smt2_path + ".stats.json";
    write_file(stats_path, compile_stats_json(sys).dump(2) + "\n");
    report.j["smt2"] = smt2_path;
    report.j["stats_file"] = stats_path;
  }
  report.emit();
  return kExitTrue;
}

int cmd_solve(const std::string& instance_path, const std::string& formula_path,
              std::string mode, const SolveConfig& cfg,
              const std::string& witness_out) {
  Report report("solve");
  Instance inst = load_instance(instance_path);
  FormulaPtr f = parse_formula(read_file(formula_path));
  if (mode == "auto") mode = inst.team ? "check" : "sat";
  CompileMode m = mode == "sat" ? CompileMode::SAT : CompileMode::CHECK;
  const WeightedTeam* X = inst.team ? &*inst.team : nullptr;
  RealSystem sys = compile(inst.structure, f, m, X);
  report.j["mode"] = mode;
  report.j["fragment"] = fragment_name(sys.fragment);
  if (sys.fragment == Fragment::FULL || sys.fragment == Fragment::FULL_LOG)
    fail(ErrorKind::NonExistentialSystem,
         "the compiled system quantifies universally; export it with "
         "`ptl compile --smt2` instead of solving numerically");
  SolveResult res = solve(sys, cfg);
  Json rj = solve_result_json(res);
  report.j["solver"] = rj;
  report.j["seed"] = cfg.seed;
  if (!witness_out.empty() && res.status == SolveStatus::SAT) {
    write_file(witness_out, rj.dump(2) + "\n");
    report.j["witness_file"] = witness_out;
  }
  std::cout << (res.status == SolveStatus::SAT ? "SAT" : "UNKNOWN") << "\n";
  report.emit();
  return res.status == SolveStatus::SAT ? kExitTrue : kExitUnknown;
}

int cmd_translate(const std::string& formula_path, const std::string& out_path) {
  Report report("translate");
  FormulaPtr f = parse_formula(read_file(formula_path));
  std::string text = print_so_formula(thm3_translate(f));
  if (!out_path.empty()) {
    write_file(out_path, text + "\n");
    report.j["out"] = out_path;
  } else {
    std::cout << text << "\n";
  }
  report.emit();
  return kExitTrue;
}

int cmd_rewrite(const std::string& formula_path, const std::string& rule,
                const std::string& out_path) {
  Report report("rewrite");
  FormulaPtr f = parse_formula(read_file(formula_path));
  FormulaPtr g;
  if (rule == "dep2indep")
    g = rewrite_dep_to_indep(f);
  else if (rule == "dep2entropy")
    g = rewrite_dep_to_entropy(f);
  else
    g = rewrite_indep_to_entropy(f);
  std::string text = print_formula(g);
  report.j["rule"] = rule;
  if (!out_path.empty()) {
    write_file(out_path, text + "\n");
    report.j["out"] = out_path;
  } else {
    std::cout << text << "\n";
  }
  report.emit();
  return kExitTrue;
}

int cmd_entropy(const std::string& instance_path, const std::string& vars_text) {
  Report report("entropy");
  Instance inst = load_instance(instance_path);
  if (!inst.team)
    fail(ErrorKind::BadInput, "the entropy command needs an instance with a team");
  auto vars = split_vars(vars_text);
  if (vars.empty()) fail(ErrorKind::BadInput, "--vars needs at least one variable");
  double h = entropy(*inst.team, vars);
  report.j["vars"] = vars;
  report.j["entropy"] = h;
  std::cout << Json(h).dump() << "\n";
  report.emit();
  return kExitTrue;
}

struct GenArgs {
  std::string kind, dialect = "search", vars_text = "x y", out_path;
  int depth = 3;
  std::uint64_t seed = 0;
  GenOptions bounds;
};

int cmd_gen(const GenArgs& a) {
  Report report("gen");
  Rng rng(a.seed);
  report.j["kind"] = a.kind;
  report.j["seed"] = a.seed;
  auto vars = split_vars(a.vars_text);
  std::string payload;
  if (a.kind == "formula") {
    FormulaPtr f;
    if (a.dialect == "fo")
      f = gen_fo_formula(rng, vars, a.depth);
    else if (a.dialect == "searchfree")
      f = gen_searchfree_formula(rng, vars, a.depth);
    else if (a.dialect == "search")
      f = gen_search_formula(rng, vars, a.depth, false);
    else if (a.dialect == "neg")
      f = gen_search_formula(rng, vars, a.depth, true);
    else
      f = gen_fopt_formula(rng, vars, a.depth);
    report.j["dialect"] = a.dialect;
    payload = print_formula(f);
  } else {
    Structure A = gen_structure(rng, a.bounds);
    if (a.kind == "structure") {
      payload = instance_to_json(A, nullptr).dump();
    } else {
      WeightedTeam X = gen_team(rng, A, vars, a.bounds);
      payload = instance_to_json(A, &X).dump();
    }
  }
  if (!a.out_path.empty()) {
    write_file(a.out_path, payload + "\n");
    report.j["out"] = a.out_path;
  } else {
    std::cout << payload << "\n";
  }
  report.emit();
  return kExitTrue;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workbench for probabilistic team semantics"};
  app.require_subcommand(1);

  CheckArgs check_args;
  auto* check = app.add_subcommand(
      "check", "decide whether the instance team satisfies the formula");
  check->add_option("instance", check_args.instance_path, "instance JSON file")
      ->required();
  check->add_option("formula", check_args.formula_path, "formula file")
      ->required();
  auto* opt_oracle = check->add_option(
      "--oracle", check_args.oracle_denom,
      "evaluate on the bounded-witness grid with this denominator");
  opt_oracle->check(CLI::PositiveNumber);
  auto* opt_witness = check->add_option("--witness", check_args.witness_path,
                                        "certify with this witness JSON file");
  auto* opt_via = check->add_flag("--via-compile", check_args.via_compile,
                                  "compile to a constraint system and solve");
  check->add_option("--budget", check_args.budget, "oracle step budget");
  check->add_option("--restarts", check_args.solver.restarts,
                    "solver restarts for --via-compile");
  check->add_option("--tol", check_args.solver.tol, "solver tolerance");
  check->add_option("--jobs", check_args.solver.jobs, "solver worker threads");
  opt_oracle->excludes(opt_witness)->excludes(opt_via);
  opt_witness->excludes(opt_via);

  std::string oracle_instance, oracle_formula;
  unsigned oracle_denom = 1;
  std::uint64_t oracle_budget = TeamEvalOptions{}.budget;
  auto* oracle = app.add_subcommand(
      "oracle", "evaluate under the bounded-witness grid semantics");
  oracle->add_option("instance", oracle_instance, "instance JSON file")
      ->required();
  oracle->add_option("formula", oracle_formula, "formula file")->required();
  oracle->add_option("--denom", oracle_denom, "grid denominator")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--budget", oracle_budget, "step budget");

  std::string compile_instance, compile_formula, compile_mode = "check";
  std::string compile_smt2, compile_stats;
  auto* compilec = app.add_subcommand(
      "compile", "compile to a real-arithmetic constraint system");
  compilec->add_option("instance", compile_instance, "instance JSON file")
      ->required();
  compilec->add_option("formula", compile_formula, "formula file")->required();
  compilec->add_option("--mode", compile_mode, "sat or check")
      ->check(CLI::IsMember({"sat", "check"}));
  compilec->add_option("--smt2", compile_smt2, "write SMT-LIB2 to this file");
  compilec->add_option("--stats", compile_stats,
                       "stats sidecar path (default: <smt2>.stats.json)");

  std::string solve_instance, solve_formula, solve_mode = "auto";
  std::string solve_witness_out;
  SolveConfig solve_cfg;
  bool solve_seed_given = false;
  auto* solvec = app.add_subcommand(
      "solve", "search the compiled constraint system numerically");
  solvec->add_option("instance", solve_instance, "instance JSON file")
      ->required();
  solvec->add_option("formula", solve_formula, "formula file")->required();
  solvec->add_option("--mode", solve_mode, "sat, check, or auto")
      ->check(CLI::IsMember({"sat", "check", "auto"}));
  solvec->add_option("--restarts", solve_cfg.restarts, "restart count");
  solvec->add_option("--tol", solve_cfg.tol, "verification tolerance");
  solvec
      ->add_option("--seed", solve_cfg.seed, "base seed (default: PTL_SEED or 0)")
      ->each([&](const std::string&) { solve_seed_given = true; });
  solvec->add_option("--jobs", solve_cfg.jobs, "worker threads");
  solvec->add_option("--witness-out", solve_witness_out,
                     "write the SAT witness JSON here");

  std::string translate_formula, translate_out;
  auto* translate = app.add_subcommand(
      "translate", "translate to a second-order sentence over distributions");
  translate->add_option("formula", translate_formula, "formula file")
      ->required();
  translate->add_option("--out", translate_out, "write the SO text here");

  std::string rewrite_formula, rewrite_rule, rewrite_out;
  auto* rewrite = app.add_subcommand("rewrite", "rewrite atoms within a formula");
  rewrite->add_option("formula", rewrite_formula, "formula file")->required();
  rewrite->add_option("--rule", rewrite_rule, "dep2indep, dep2entropy, or indep2entropy")
      ->required()
      ->check(CLI::IsMember({"dep2indep", "dep2entropy", "indep2entropy"}));
  rewrite->add_option("--out", rewrite_out, "write the rewritten formula here");

  std::string entropy_instance, entropy_vars;
  auto* entropyc = app.add_subcommand(
      "entropy", "base-2 entropy of a marginal distribution of the team");
  entropyc->add_option("instance", entropy_instance, "instance JSON file")
      ->required();
  entropyc->add_option("--vars", entropy_vars, "space-separated variable list")
      ->required();

  GenArgs gen_args;
  bool gen_seed_given = false;
  auto* gen = app.add_subcommand("gen", "generate random test inputs");
  gen->add_option("--kind", gen_args.kind, "structure, instance, or formula")
      ->required()
      ->check(CLI::IsMember({"structure", "instance", "formula"}));
  gen->add_option("--dialect", gen_args.dialect,
                  "formula dialect: fo, searchfree, search, neg, or fopt")
      ->check(CLI::IsMember({"fo", "searchfree", "search", "neg", "fopt"}));
  gen->add_option("--vars", gen_args.vars_text, "space-separated variable list");
  gen->add_option("--depth", gen_args.depth, "formula depth bound");
  gen->add_option("--seed", gen_args.seed, "seed (default: PTL_SEED or 0)")
      ->each([&](const std::string&) { gen_seed_given = true; });
  gen->add_option("--max-domain", gen_args.bounds.max_domain, "domain size cap");
  gen->add_option("--max-support", gen_args.bounds.max_support,
                  "team support cap");
  gen->add_option("--max-den", gen_args.bounds.max_den,
                  "weight denominator cap");
  gen->add_option("--out", gen_args.out_path, "write the artifact here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (check->parsed()) return cmd_check(check_args);
    if (oracle->parsed())
      return cmd_oracle(oracle_instance, oracle_formula, oracle_denom,
                        oracle_budget);
    if (compilec->parsed())
      return cmd_compile(compile_instance, compile_formula, compile_mode,
                         compile_smt2, compile_stats);
    if (solvec->parsed()) {
      if (!solve_seed_given) solve_cfg.seed = env_seed();
      return cmd_solve(solve_instance, solve_formula, solve_mode, solve_cfg,
                       solve_witness_out);
    }
    if (translate->parsed()) return cmd_translate(translate_formula, translate_out);
    if (rewrite->parsed())
      return cmd_rewrite(rewrite_formula, rewrite_rule, rewrite_out);
    if (entropyc->parsed()) return cmd_entropy(entropy_instance, entropy_vars);
    if (gen->parsed()) {
      if (!gen_seed_given) gen_args.seed = env_seed();
      return cmd_gen(gen_args);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what()
              << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
