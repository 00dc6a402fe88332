#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "helpers.hpp"
#include "opdl/syntax.hpp"

using namespace opdl;
using namespace opdl::testing;

TEST_CASE("negate on the constants and connectives") {
  CHECK(equal(negate(f_top()), f_bot()));
  CHECK(equal(negate(f_bot()), f_top()));
  CHECK(equal(negate(f_and(f_pos("p"), f_pos("q"))),
              f_or(f_neg("p"), f_neg("q"))));
  CHECK(equal(negate(f_or(f_pos("p"), f_pos("q"))),
              f_and(f_neg("p"), f_neg("q"))));
  auto box = f_box(p_inst("a"), f_pos("p"));
  CHECK(equal(negate(box), f_dia(p_inst("a"), f_neg("p"))));
  CHECK(equal(negate(negate(box)), box));
}

TEST_CASE("negate is involutive, size-preserving, and kind-swapping") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    FormulaPtr f = gen_formula(rng, 4);
    FormulaPtr n = negate(f);
    CHECK(equal(negate(n), f));
    CHECK(formula_size(n) == formula_size(f));
    auto swapped = [](FKind k) {
      switch (k) {
        case FKind::Top: return FKind::Bot;
        case FKind::Bot: return FKind::Top;
        case FKind::Pos: return FKind::Neg;
        case FKind::Neg: return FKind::Pos;
        case FKind::Or: return FKind::And;
        case FKind::And: return FKind::Or;
        case FKind::Box: return FKind::Dia;
        case FKind::Dia: return FKind::Box;
      }
      return k;
    };
    CHECK(n->kind == swapped(f->kind));
  }
}

TEST_CASE("implication and equivalence sugar") {
  CHECK(equal(mk_implies(f_pos("p"), f_pos("q")), f_or(f_neg("p"), f_pos("q"))));
  CHECK(equal(mk_implies(f_top(), f_pos("g")), f_or(f_bot(), f_pos("g"))));
  auto box = f_box(p_inst("a"), f_pos("p"));
  CHECK(equal(mk_implies(box, box),
              f_or(f_dia(p_inst("a"), f_neg("p")), box)));
  CHECK(equal(mk_iff(f_pos("p"), f_pos("q")),
              f_and(mk_implies(f_pos("p"), f_pos("q")),
                    mk_implies(f_pos("q"), f_pos("p")))));
}

TEST_CASE("sequents have set semantics") {
  Sequent s;
  s.insert(f_pos("p"));
  s.insert(f_pos("p"));
  CHECK(s.size() == 1);
  s.insert(f_or(f_pos("p"), f_pos("q")));
  s.insert(f_or(f_pos("p"), f_pos("q")));
  CHECK(s.size() == 2);
  CHECK(contains(s, f_pos("p")));
  CHECK(sequent_equal(seq_plus(s, f_pos("p")), s));
}

TEST_CASE("closure of an atom is itself") {
  OpSemRegistry reg = base_registry();
  FlResult r = fl_closure({f_pos("p")}, reg, 100);
  REQUIRE(!r.budget_exceeded);
  CHECK(r.closure.size() == 1);
  CHECK(contains(r.closure, f_pos("p")));
}

TEST_CASE("closure of a sequencing box") {
  OpSemRegistry reg = base_registry();
  auto a = p_inst("a"), b = p_inst("b");
  auto f = f_box(p_seq(a, b), f_pos("p"));
  FlResult r = fl_closure({f}, reg, 100);
  REQUIRE(!r.budget_exceeded);
  Sequent expect{f, f_box(a, f_box(b, f_pos("p"))), f_box(b, f_pos("p")),
                 f_pos("p")};
  CHECK(sequent_equal(r.closure, expect));
}

TEST_CASE("closure of an iteration box") {
  OpSemRegistry reg = base_registry();
  auto a = p_inst("a");
  auto f = f_box(p_star(a), f_pos("p"));
  FlResult r = fl_closure({f}, reg, 100);
  REQUIRE(!r.budget_exceeded);
  Sequent expect{f, f_box(a, f), f_box(p_seq(a, p_star(a)), f_pos("p")),
                 f_pos("p")};
  CHECK(sequent_equal(r.closure, expect));
}

TEST_CASE("closure is a monotone fixpoint containing its input") {
  OpSemRegistry reg = base_registry();
  Rng rng(23);
  for (int i = 0; i < 60; ++i) {
    FormulaPtr f = gen_formula(rng, 3);
    FormulaPtr g = gen_formula(rng, 2);
    FlResult r1 = fl_closure({f}, reg, 5000);
    FlResult r2 = fl_closure({f, g}, reg, 5000);
    if (r1.budget_exceeded || r2.budget_exceeded) continue;
    CHECK(is_subset({f}, r1.closure));
    CHECK(is_subset(r1.closure, r2.closure));
    // Fixpoint: closing the closure adds nothing.
    FlResult again = fl_closure(r1.closure, reg, 5000);
    REQUIRE(!again.budget_exceeded);
    CHECK(sequent_equal(again.closure, r1.closure));
  }
}

TEST_CASE("closure reports budget exhaustion instead of a partial set") {
  OpSemRegistry reg = pi_registry();
  auto f = f_box(make_foreign("ccs", "P1", reg), f_pos("p"));
  FlResult r = fl_closure({f}, reg, 2);
  CHECK(r.budget_exceeded);
  FlResult ok = fl_closure({f}, reg, 1000);
  CHECK(!ok.budget_exceeded);
  CHECK(contains(ok.closure, f_pos("p")));
}

TEST_CASE("compare is a total order consistent with equality") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    FormulaPtr f = gen_formula(rng, 3), g = gen_formula(rng, 3);
    CHECK((compare(f, g) == 0) == equal(f, g));
    CHECK(compare(f, g) == -compare(g, f));
    CHECK(compare(f, f) == 0);
  }
}
