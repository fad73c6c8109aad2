#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "json.hpp"

#include "ptl/dialect.hpp"
#include "ptl/parser.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
  int exit = -1;
  std::string out;
};

std::string cli_path() {
  const char* p = std::getenv("PTL_CLI");
  return p && *p ? p : "./ptl";
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

std::string last_line(const std::string& text) {
  auto end = text.find_last_not_of('\n');
  if (end == std::string::npos) return "";
  auto start = text.rfind('\n', end);
  return text.substr(start + 1, end - start);
}

json report_of(const CliResult& r) { return json::parse(last_line(r.out)); }

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("ptl_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string fx(const std::string& name, const std::string& content) {
  fs::path p = work_dir() / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string structure_abc() {
  return R"({"domain":["a","b","c"],
             "relations":{"R":{"arity":1,"tuples":[["a"],["b"]]},
                          "S":{"arity":2,"tuples":[["a","b"]]}},
             "constants":{"zero":"a","one":"b"}})";
}

std::string instance_pair(const std::string& rows) {
  return R"({"domain":["a","b"],
             "relations":{"R":{"arity":1,"tuples":[["a"]]},
                          "S":{"arity":2,"tuples":[]}},
             "constants":{"zero":"a","one":"b"},
             "team":{"vars":["x","y"],"rows":[)" +
         rows + "]}}";
}

std::string instance_single() {
  return R"({"domain":["a","b"],
             "relations":{"R":{"arity":1,"tuples":[["a"]]},
                          "S":{"arity":2,"tuples":[]}},
             "constants":{"zero":"a","one":"b"},
             "team":{"vars":["x"],"rows":[{"t":["a"],"w":"1/2"},
                                          {"t":["b"],"w":"1/2"}]}})";
}

std::string rows_diag() {
  return R"({"t":["a","a"],"w":"1/2"},{"t":["b","b"],"w":"1/2"})";
}

std::string rows_product() {
  return R"({"t":["a","a"],"w":"1/4"},{"t":["a","b"],"w":"1/4"},
            {"t":["b","a"],"w":"1/4"},{"t":["b","b"],"w":"1/4"})";
}

std::string rows_skew() {
  return R"({"t":["a","b"],"w":"2/3"},{"t":["b","a"],"w":"1/3"})";
}

}  // namespace

TEST_CASE("check decides weight-comparison formulas directly") {
  std::string inst = fx("diag.json", instance_pair(rows_diag()));
  std::string f_true =
      fx("cmp_true.ptl", "cmp(x = @zero | x = x <= y = @zero | y = y)");
  std::string f_false =
      fx("cmp_false.ptl", "cmp(x = x | x = x <= x = @zero | x = x)");

  CliResult r = run_cli("check " + inst + " " + f_true);
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "TRUE");
  json rep = report_of(r);
  CHECK(rep["route"] == "fopt");
  CHECK(rep["dialect"] == "FOPT");
  CHECK(rep["verdict"] == "TRUE");

  r = run_cli("check " + inst + " " + f_false);
  CHECK(r.exit == 1);
  CHECK(first_line(r.out) == "FALSE");

  std::string st = fx("abc.json", structure_abc());
  std::string sent = fx("cmp_sent.ptl",
                        "A1 x. cmp(x = @zero | x = x <= x = x | x = x)");
  r = run_cli("check " + st + " " + sent);
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "TRUE");
}

TEST_CASE("check evaluates search-free formulas exactly") {
  std::string f = fx("indep_xy.ptl", "indep( ; x ; y)");

  CliResult r = run_cli("check " + fx("prod.json", instance_pair(rows_product())) + " " + f);
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "TRUE");
  CHECK(report_of(r)["route"] == "exact");

  r = run_cli("check " + fx("diag.json", instance_pair(rows_diag())) + " " + f);
  CHECK(r.exit == 1);
  CHECK(first_line(r.out) == "FALSE");
}

TEST_CASE("check refuses to guess a route for search formulas") {
  std::string inst = fx("diag.json", instance_pair(rows_diag()));
  std::string f = fx("split.ptl", "indep( ; x ; y) \\/ dep(x ; y)");
  CliResult r = run_cli("check " + inst + " " + f);
  CHECK(r.exit == 2);
  CHECK(r.out.find("search-required") != std::string::npos);
  CHECK(r.out.find("--oracle") != std::string::npos);
  CHECK(r.out.find("--witness") != std::string::npos);
  CHECK(r.out.find("--via-compile") != std::string::npos);
}

TEST_CASE("check --oracle runs the bounded grid evaluator") {
  std::string inst = fx("diag.json", instance_pair(rows_diag()));
  std::string f = fx("split.ptl", "indep( ; x ; y) \\/ dep(x ; y)");

  CliResult r = run_cli("check " + inst + " " + f + " --oracle 2");
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "TRUE");
  json rep = report_of(r);
  CHECK(rep["route"] == "oracle");
  CHECK(rep["denom"] == 2);

  CHECK(run_cli("check " + inst + " " + f + " --oracle 0").exit == 2);
  CHECK(run_cli("oracle " + inst + " " + f + " --denom 2").exit == 0);
}

TEST_CASE("check --witness certifies split choices exactly") {
  std::string inst = fx("single.json", instance_single());
  std::string f = fx("half.ptl", "x = @zero \\/ x != @zero");

  std::string good = fx("w_good.json",
                        R"({"": {"k":"1/2","yw":["1/2","0"],"zw":["0","1/2"]}})");
  CliResult r = run_cli("check " + inst + " " + f + " --witness " + good);
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "TRUE");
  CHECK(report_of(r)["route"] == "witness");

  std::string bad = fx("w_bad.json",
                       R"({"": {"k":"1/2","yw":["0","1/2"],"zw":["1/2","0"]}})");
  r = run_cli("check " + inst + " " + f + " --witness " + bad);
  CHECK(r.exit == 1);
  CHECK(first_line(r.out) == "FALSE");

  std::string shape = fx("w_shape.json",
                         R"({"": {"k":"1/2","yw":["1/2"],"zw":["0"]}})");
  r = run_cli("check " + inst + " " + f + " --witness " + shape);
  CHECK(r.exit == 2);
  CHECK(r.out.find("witness-shape") != std::string::npos);
}

TEST_CASE("check --via-compile certifies TRUE and reports UNKNOWN otherwise") {
  std::string f = fx("split.ptl", "indep( ; x ; y) \\/ dep(x ; y)");

  CliResult r = run_cli("check " + fx("prod.json", instance_pair(rows_product())) +
                        " " + f + " --via-compile");
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "TRUE");
  json rep = report_of(r);
  CHECK(rep["route"] == "compile");
  CHECK(rep["fragment"] == "EXISTENTIAL");
  CHECK(rep["solver"]["status"] == "sat");

  std::string mm = fx("skew.json", instance_pair(rows_skew()));
  std::string f_mm = fx("marg2.ptl", "exists z. marg(x ; z) & marg(y ; z)");
  r = run_cli("check " + mm + " " + f_mm + " --via-compile --restarts 6");
  CHECK(r.exit == 3);
  CHECK(first_line(r.out) == "UNKNOWN");

  std::string f_neg = fx("negsplit.ptl", "~ (x = @zero \\/ x = @zero)");
  r = run_cli("check " + fx("single.json", instance_single()) + " " + f_neg +
              " --via-compile");
  CHECK(r.exit == 2);
  CHECK(r.out.find("--smt2") != std::string::npos);
}

TEST_CASE("compile writes deterministic SMT-LIB2 with a stats sidecar") {
  std::string st = fx("abc.json", structure_abc());
  std::string f = fx("r_x.ptl", "R(x)");
  std::string s1 = (work_dir() / "one.smt2").string();
  std::string s2 = (work_dir() / "two.smt2").string();

  CliResult r = run_cli("compile " + st + " " + f + " --mode sat --smt2 " + s1);
  CHECK(r.exit == 0);
  json rep = report_of(r);
  CHECK(rep["fragment"] == "EXISTENTIAL");
  CHECK(rep["stats"]["num_vars"] == 3);

  CHECK(run_cli("compile " + st + " " + f + " --mode sat --smt2 " + s2).exit == 0);
  CHECK(slurp(s1) == slurp(s2));
  CHECK(slurp(s1) ==
        "(set-logic QF_NRA)\n"
        "(declare-const s_a Real)\n"
        "(declare-const s_b Real)\n"
        "(declare-const s_c Real)\n"
        "(assert (and (<= 0 s_a) (<= 0 s_b) (<= 0 s_c) "
        "(not (= 0 (+ s_a s_b s_c))) (= s_c 0)))\n"
        "(check-sat)\n"
        "(get-model)\n");

  json stats = json::parse(slurp(s1 + ".stats.json"));
  CHECK(stats["num_vars"] == 3);
  CHECK(stats["fragment"] == "EXISTENTIAL");
}

TEST_CASE("compile reports log fragments but refuses SMT-LIB2 export") {
  std::string inst = fx("diag.json", instance_pair(rows_diag()));
  std::string f = fx("ent.ptl", "entropy(x ; y)");

  CliResult r = run_cli("compile " + inst + " " + f);
  CHECK(r.exit == 0);
  CHECK(report_of(r)["fragment"] == "EXISTENTIAL_LOG");

  r = run_cli("compile " + inst + " " + f + " --smt2 " +
              (work_dir() / "ent.smt2").string());
  CHECK(r.exit == 2);
  CHECK(r.out.find("log-unsupported") != std::string::npos);
}

TEST_CASE("compile rejects a team over the wrong variables") {
  std::string inst = fx("diag.json", instance_pair(rows_diag()));
  std::string f = fx("r_x.ptl", "R(x)");
  CliResult r = run_cli("compile " + inst + " " + f + " --mode check");
  CHECK(r.exit == 2);
  CHECK(r.out.find("bad-input") != std::string::npos);
}

TEST_CASE("solve finds witnesses and is reproducible per seed") {
  std::string st = fx("abc.json", structure_abc());
  std::string f = fx("r_x.ptl", "R(x)");
  std::string w1 = (work_dir() / "w1.json").string();
  std::string w2 = (work_dir() / "w2.json").string();

  CliResult r = run_cli("solve " + st + " " + f + " --seed 3 --witness-out " + w1);
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "SAT");
  json rep = report_of(r);
  CHECK(rep["mode"] == "sat");
  CHECK(rep["seed"] == 3);
  CHECK(rep["solver"]["status"] == "sat");

  CHECK(run_cli("solve " + st + " " + f + " --seed 3 --witness-out " + w2).exit == 0);
  CHECK(slurp(w1) == slurp(w2));
  json w = json::parse(slurp(w1));
  CHECK(w["status"] == "sat");
  CHECK(!w["witness"].empty());

  CliResult via_env = run_cli("solve " + st + " " + f, "PTL_SEED=3 ");
  CHECK(report_of(via_env)["seed"] == 3);
}

TEST_CASE("solve directs universally quantified systems to the exporter") {
  std::string st = fx("abc.json", structure_abc());
  std::string f = fx("bneg.ptl", "~ R(x)");
  CliResult r = run_cli("solve " + st + " " + f);
  CHECK(r.exit == 2);
  CHECK(r.out.find("non-existential-system") != std::string::npos);
  CHECK(r.out.find("--smt2") != std::string::npos);
}

TEST_CASE("solve answers UNKNOWN when no witness verifies") {
  std::string st = fx("abc.json", structure_abc());
  std::string f = fx("contra.ptl", "R(x) & !R(x)");
  CliResult r = run_cli("solve " + st + " " + f + " --restarts 4");
  CHECK(r.exit == 3);
  CHECK(first_line(r.out) == "UNKNOWN");
  CHECK(report_of(r)["solver"]["restarts"] == 4);
}

TEST_CASE("translate prints the distribution-level sentence") {
  std::string f = fx("i3.ptl", "indep(x ; y ; z)");
  CliResult r = run_cli("translate " + f);
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) ==
        "forall x. forall y. forall z. "
        "SUM[z] f(x,y,z) * SUM[y] f(x,y,z) = f(x,y,z) * SUM[y z] f(x,y,z)");

  std::string out = (work_dir() / "so.txt").string();
  CHECK(run_cli("translate " + f + " --out " + out).exit == 0);
  CHECK(first_line(slurp(out)) == first_line(r.out));
}

TEST_CASE("rewrite applies the named atom rule") {
  std::string f = fx("dep.ptl", "dep(x ; y)");

  CliResult r = run_cli("rewrite " + f + " --rule dep2indep");
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "indep(x ; y ; y)");

  r = run_cli("rewrite " + f + " --rule dep2entropy");
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "entropy(x ; x y)");

  std::string mi = fx("mi.ptl", "indep( ; y ; z)");
  r = run_cli("rewrite " + mi + " --rule indep2entropy");
  CHECK(r.exit == 0);
  auto g = ptl::parse_formula(first_line(r.out));
  CHECK(ptl::dialect_of(g) == ptl::Dialect::FO_ATOMS);

  CHECK(run_cli("rewrite " + f).exit == 2);
  CHECK(run_cli("rewrite " + f + " --rule frobnicate").exit == 2);
}

TEST_CASE("entropy prints bits for a marginal of the team") {
  CliResult r = run_cli("entropy " + fx("single.json", instance_single()) +
                        " --vars \"x\"");
  CHECK(r.exit == 0);
  CHECK(first_line(r.out) == "1.0");
  CHECK(report_of(r)["entropy"] == 1.0);

  r = run_cli("entropy " + fx("abc.json", structure_abc()) + " --vars \"x\"");
  CHECK(r.exit == 2);
  CHECK(r.out.find("team") != std::string::npos);
}

TEST_CASE("gen is seed-reproducible and emits parseable artifacts") {
  CliResult a = run_cli("gen --kind formula --dialect search --seed 5");
  CliResult b = run_cli("gen --kind formula --dialect search --seed 5");
  CHECK(a.exit == 0);
  CHECK(first_line(a.out) == first_line(b.out));
  CHECK(!first_line(a.out).empty());
  CHECK_NOTHROW(ptl::parse_formula(first_line(a.out)));

  CliResult flag = run_cli("gen --kind formula --dialect fopt --seed 7");
  CliResult env = run_cli("gen --kind formula --dialect fopt", "PTL_SEED=7 ");
  CHECK(first_line(flag.out) == first_line(env.out));
  CHECK(ptl::dialect_of(ptl::parse_formula(first_line(flag.out))) ==
        ptl::Dialect::FOPT);

  CliResult inst = run_cli("gen --kind instance --seed 9");
  json j = json::parse(first_line(inst.out));
  CHECK(j.contains("team"));
  CHECK(j.contains("domain"));

  CliResult st = run_cli("gen --kind structure --seed 9");
  CHECK(!json::parse(first_line(st.out)).contains("team"));

  CHECK(run_cli("gen --kind formula", "PTL_SEED=abc ").exit == 2);
}

TEST_CASE("usage errors exit with code 2 and help with 0") {
  CHECK(run_cli("--help").exit == 0);
  CHECK(run_cli("check --help").exit == 0);
  CHECK(run_cli("").exit == 2);
  CHECK(run_cli("frobnicate").exit == 2);
  CHECK(run_cli("gen --kind nope").exit == 2);

  std::string f = fx("r_x.ptl", "R(x)");
  CliResult r = run_cli("check " + (work_dir() / "missing.json").string() + " " + f);
  CHECK(r.exit == 2);
  CHECK(r.out.find("cannot open") != std::string::npos);

  std::string badf = fx("bad.ptl", "R(x");
  r = run_cli("check " + fx("abc.json", structure_abc()) + " " + badf);
  CHECK(r.exit == 2);
  CHECK(r.out.find("syntax") != std::string::npos);
}
