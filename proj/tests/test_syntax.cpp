#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ptl/dialect.hpp"
#include "ptl/generate.hpp"
#include "ptl/parser.hpp"
#include "ptl/printer.hpp"

using namespace ptl;

static FormulaPtr P(const std::string& s) { return parse_formula(s); }

TEST_CASE("atoms parse") {
  auto f = P("R(x, y)");
  CHECK(f->kind == FKind::RelAtom);
  CHECK(f->args.size() == 2);

  auto g = P("!S(x, @zero)");
  CHECK(g->negated);
  CHECK(g->args[1].is_const);
  CHECK(g->args[1].name == "zero");

  auto e = P("x != y");
  CHECK(e->kind == FKind::Eq);
  CHECK(e->negated);

  auto i = P("indep(x y ; z ; w)");
  CHECK(i->t0 == std::vector<std::string>{"x", "y"});
  auto i2 = P("indep( ; x ; y)");
  CHECK(i2->t0.empty());
  auto i3 = P("indep(; x ; y)");
  CHECK(formula_equal(i2, i3));

  auto d = P("dep(x ; y z)");
  CHECK(d->kind == FKind::Dep);
  auto m = P("marg(x y ; z w)");
  CHECK(m->kind == FKind::Marg);
  auto h = P("entropy(x ; x y z)");
  CHECK(h->kind == FKind::EntropyEq);

  auto c = P("cmp(R(x) | x = x <= S(x, y) | x != y)");
  CHECK(c->kind == FKind::Cmp);
  CHECK(c->conds[3]->kind == Cond::Kind::Not);
}

TEST_CASE("precedence and grouping") {
  auto f = P("R(x) & S(x, y) \\/ T(y)");
  REQUIRE(f->kind == FKind::SplitOr);
  CHECK(f->a->kind == FKind::And);

  auto g = P("R(x) \\/ S(x, y) || T(y)");
  REQUIRE(g->kind == FKind::GlobalOr);
  CHECK(g->a->kind == FKind::SplitOr);

  auto q = P("exists x. R(x) & S(x, x)");
  REQUIRE(q->kind == FKind::Exists);
  CHECK(q->a->kind == FKind::And);

  auto n = P("~ R(x) & S(x, y)");
  REQUIRE(n->kind == FKind::And);
  CHECK(n->a->kind == FKind::BoolNeg);

  auto nq = P("~ exists y. R(y)");
  REQUIRE(nq->kind == FKind::BoolNeg);
  CHECK(nq->a->kind == FKind::Exists);

  auto paren = P("R(x) & (S(x, y) \\/ T(y))");
  REQUIRE(paren->kind == FKind::And);
  CHECK(paren->b->kind == FKind::SplitOr);
}

TEST_CASE("comments and whitespace") {
  auto f = P("# leading comment\nforall x.  # walk every element\n  R(x)\n");
  CHECK(f->kind == FKind::Forall);
}

TEST_CASE("syntax errors carry positions") {
  try {
    P("R(x) &\n& S(y, y)");
    FAIL("expected a syntax error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Syntax);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(P("exists exists. R(x)"), Error);
  CHECK_THROWS_AS(P("!(R(x) & S(y, y))"), Error);
  CHECK_THROWS_AS(P("marg(x y ; z)"), Error);
  CHECK_THROWS_AS(P("indep(x ; ; y)"), Error);
  CHECK_THROWS_AS(P("R(x) extra"), Error);
  CHECK_THROWS_AS(P(""), Error);
}

TEST_CASE("print parse round trip on hand-written formulas") {
  const char* samples[] = {
      "R(x, y)",
      "!R(x, y)",
      "x = y",
      "x != @one",
      "indep(; x ; y)",
      "indep(x ; y ; z w)",
      "dep(x y ; z)",
      "marg(x ; y)",
      "entropy(x ; x y)",
      "cmp(R(x) | x = x <= S(x, y) | !(R(x) & R(y)))",
      "R(x) & S(x, y) \\/ T(y)",
      "R(x) \\/ (S(x, y) || T(y))",
      "~ exists y. indep(; x ; y)",
      "not E1 x. cmp(R(x) | x = x <= R(x) | x = x)",
      "forall x. exists y. S(x, y) & !S(y, x)",
      "A1 z. (R(z) || not R(z))",
      "~ ~ forall x. dep(x ; x)",
      "(R(x) \\/ S(x, x)) & T(x)",
      "exists x. (x = y \\/ x != z) & R(x)",
  };
  for (const char* s : samples) {
    CAPTURE(s);
    auto f = P(s);
    std::string printed = print_formula(f);
    auto g = P(printed);
    CHECK(formula_equal(f, g));
    CHECK(print_formula(g) == printed);
  }
}

TEST_CASE("print parse round trip on random formulas", "[property]") {
  Rng rng(20260823);
  for (int i = 0; i < 300; ++i) {
    FormulaPtr f;
    switch (i % 3) {
      case 0: f = gen_fopt_formula(rng, {"x", "y"}, 4); break;
      case 1: f = gen_fo_formula(rng, {"x"}, 4); break;
      default: f = gen_search_formula(rng, {"x", "y"}, 4); break;
    }
    std::string printed = print_formula(f);
    CAPTURE(printed);
    auto g = P(printed);
    CHECK(formula_equal(f, g));
    CHECK(print_formula(g) == printed);
  }
}

TEST_CASE("dialect classification") {
  CHECK(dialect_of(P("exists x. x = y")) == Dialect::FO);
  CHECK(dialect_of(P("R(x) & !S(x, y)")) == Dialect::FO);
  CHECK(dialect_of(P("dep(x ; y)")) == Dialect::FO_ATOMS);
  CHECK(dialect_of(P("forall x. marg(x ; y)")) == Dialect::FO_ATOMS);
  CHECK(dialect_of(P("~ exists y. indep(; x ; y)")) == Dialect::FO_ATOMS_NEG);
  CHECK(dialect_of(P("~ R(x)")) == Dialect::FO_ATOMS_NEG);
  CHECK(dialect_of(P("E1 x. R(x)")) == Dialect::FOPT);
  CHECK(dialect_of(P("not R(x)")) == Dialect::FOPT);
  CHECK(dialect_of(P("cmp(R(x) | x = x <= R(x) | x = x)")) == Dialect::FOPT);

  CHECK_THROWS_AS(dialect_of(P("E1 x. (R(x) \\/ S(x, x))")), Error);
  CHECK_THROWS_AS(dialect_of(P("not dep(x ; y)")), Error);
  CHECK_THROWS_AS(dialect_of(P("~ not R(x)")), Error);
  CHECK_THROWS_AS(dialect_of(P("exists x. cmp(R(x) | x = x <= R(x) | x = x)")), Error);
}

TEST_CASE("free variables") {
  auto fv = [](const char* s) { return free_vars(parse_formula(s)); };
  CHECK(fv("exists x. x = y") == std::set<std::string>{"y"});
  CHECK(fv("A1 x. cmp(R(x) | x = x <= S(x, y) | x = x)") == std::set<std::string>{"y"});
  CHECK(fv("indep(x ; y ; z)") == std::set<std::string>{"x", "y", "z"});
  CHECK(fv("forall x. forall y. S(x, y)").empty());
  CHECK(fv("x = @zero") == std::set<std::string>{"x"});
  CHECK(fv("exists x. R(x) & S(x, y)") == std::set<std::string>{"y"});
}

TEST_CASE("star translation") {
  auto f = star_translate(P("E1 x. R(x)"));
  CHECK(print_formula(f) == "exists x. R(x)");

  auto g = star_translate(P("not E1 x. R(x)"));
  CHECK(print_formula(g) == "forall x. !R(x)");

  auto c = star_translate(P("cmp(R(x) | x = y <= S(x, y) | R(y))"));
  CHECK(print_formula(c) == "!R(x) \\/ x != y \\/ S(x, y) \\/ !R(y)");

  auto nc = star_translate(P("not cmp(R(x) | x = y <= S(x, y) | R(y))"));
  CHECK(print_formula(nc) == "R(x) & x = y & !S(x, y) & R(y)");

  auto gl = star_translate(P("R(x) || not S(x, x)"));
  CHECK(print_formula(gl) == "R(x) \\/ !S(x, x)");

  CHECK_THROWS_AS(star_translate(P("~ R(x)")), Error);
  CHECK_THROWS_AS(star_translate(P("dep(x ; y)")), Error);
}

TEST_CASE("star translation lands in FO and keeps free variables", "[property]") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    auto f = gen_fopt_formula(rng, {"x", "y"}, 4);
    auto s = star_translate(f);
    CHECK(dialect_of(s) == Dialect::FO);
    CHECK(free_vars(s) == free_vars(f));
  }
}
