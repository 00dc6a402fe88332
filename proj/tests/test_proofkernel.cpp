#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "helpers.hpp"
#include "opdl/frontend.hpp"
#include "opdl/proofkernel.hpp"

using namespace opdl;
using namespace opdl::testing;

static ProofNode node(Sequent s, RuleId r) {
  ProofNode n;
  n.sequent = std::move(s);
  n.rule.rule = r;
  return n;
}

TEST_CASE("a single axiom node checks") {
  OpSemRegistry reg = base_registry();
  Derivation d;
  d.root = "n0";
  d.nodes["n0"] = node({f_pos("p"), f_neg("p")}, RuleId::Ax);
  CHECK(!check_local(d, reg));
  CHECK(!check_proof(d, {f_pos("p"), f_neg("p")}, reg));
}

TEST_CASE("K on the empty program is rejected") {
  OpSemRegistry reg = base_registry();
  Derivation d;
  d.root = "n0";
  ProofNode k = node({f_box(p_stuck(), f_pos("p"))}, RuleId::K);
  k.rule.k_prog = p_stuck();
  k.rule.premises = {"n1"};
  d.nodes["n0"] = k;
  d.nodes["n1"] = node({f_pos("p")}, RuleId::Ax);  // deliberately bogus leaf
  auto v = check_local(d, reg);
  REQUIRE(v);
  CHECK(v->node == "n0");
}

TEST_CASE("an incomplete operational box is rejected") {
  OpSemRegistry reg = base_registry();
  auto P = make_foreign("ccs", "a.0 + b.0", reg);
  auto boxp = f_box(P, f_pos("p"));
  // op_step(P) has an a-transition and a b-transition; list only one premise.
  Derivation d;
  d.root = "n0";
  ProofNode o = node({boxp}, RuleId::BoxO);
  o.rule.principal = boxp;
  o.rule.premises = {"n1"};
  d.nodes["n0"] = o;
  d.nodes["n1"] =
      node({f_box(p_inst("a"), f_box(p_term(), f_pos("p")))}, RuleId::Open);
  auto v = check_local(d, reg);
  REQUIRE(v);
  CHECK(v->node == "n0");

  // The complete premise set is accepted.
  ProofNode o2 = o;
  o2.rule.premises = {"n1", "n2"};
  d.nodes["n0"] = o2;
  d.nodes["n2"] =
      node({f_box(p_inst("b"), f_box(p_term(), f_pos("p")))}, RuleId::Open);
  CheckOptions open;
  open.allow_open = true;
  CHECK(!check_local(d, reg, open));
}

TEST_CASE("immediate ancestors follow the rule structure") {
  OpSemRegistry reg = base_registry();
  auto p = f_pos("p"), q = f_pos("q");

  // Or: the principal's ancestors are both disjuncts.
  Derivation d;
  d.root = "n0";
  ProofNode orn = node({f_or(p, q)}, RuleId::Or);
  orn.rule.principal = f_or(p, q);
  orn.rule.premises = {"n1"};
  d.nodes["n0"] = orn;
  d.nodes["n1"] = node({p, q}, RuleId::Open);
  auto anc = immediate_ancestors(d, {"n0", f_or(p, q)}, reg);
  REQUIRE(anc.size() == 2);
  CHECK(anc[0].node == "n1");

  // K: both modal formulas trace to their bodies.
  Derivation k;
  k.root = "n0";
  auto a = p_inst("a");
  ProofNode kn = node({f_dia(a, q), f_box(a, p)}, RuleId::K);
  kn.rule.k_prog = a;
  kn.rule.premises = {"n1"};
  k.nodes["n0"] = kn;
  k.nodes["n1"] = node({q, p}, RuleId::Open);
  auto kb = immediate_ancestors(k, {"n0", f_box(a, p)}, reg);
  REQUIRE(kb.size() == 1);
  CHECK(equal(kb[0].formula, p));
  auto kd = immediate_ancestors(k, {"n0", f_dia(a, q)}, reg);
  REQUIRE(kd.size() == 1);
  CHECK(equal(kd[0].formula, q));

  // Side formulas map to their unique copy in the premise.
  Derivation w;
  w.root = "n0";
  ProofNode wn = node({p, q}, RuleId::W);
  wn.rule.principal = q;
  wn.rule.premises = {"n1"};
  w.nodes["n0"] = wn;
  w.nodes["n1"] = node({p}, RuleId::Open);
  auto ws = immediate_ancestors(w, {"n0", p}, reg);
  REQUIRE(ws.size() == 1);
  CHECK(equal(ws[0].formula, p));
  CHECK(immediate_ancestors(w, {"n0", q}, reg).empty());  // weakened away
}

TEST_CASE("progress verdicts on the cyclic fixtures") {
  OpSemRegistry reg = base_registry();
  Derivation li = parse_proof(read_fixture("loop_invariance.proof"), reg);
  CHECK(check_progress(li, reg).progressing);

  Derivation bad = parse_proof(read_fixture("unsound_cut.proof"), reg);
  CHECK(!check_local(bad, reg));
  ProgressResult pr = check_progress(bad, reg);
  REQUIRE(!pr.progressing);
  REQUIRE(pr.lasso);
  CHECK(!lasso_has_progressing_thread(bad, *pr.lasso, reg));

  // Loop-free derivations are trivially progressing.
  Derivation mp = parse_proof(read_fixture("mp.proof"), reg);
  CHECK(check_progress(mp, reg).progressing);
}

TEST_CASE("check_proof compares the stated conclusion") {
  OpSemRegistry reg = pi_registry();
  Derivation d = parse_proof(read_fixture("fig_pi_fwd.proof"), reg);
  CHECK(!check_proof(d, d.nodes.at(d.root).sequent, reg));
  auto fail = check_proof(d, {f_pos("p")}, reg);
  REQUIRE(fail);
  CHECK(fail->stage == "conclusion");
}

TEST_CASE("unfolding expands back-edges monotonically") {
  OpSemRegistry reg = pi_registry();
  CheckOptions open;
  open.allow_open = true;

  Derivation li = parse_proof(read_fixture("loop_invariance.proof"), reg);
  Derivation u0 = unfold(li, 0);
  bool has_open = false;
  for (const auto& [id, n] : u0.nodes) {
    CHECK(n.rule.rule != RuleId::Loop);
    has_open |= n.rule.rule == RuleId::Open;
  }
  CHECK(has_open);
  CHECK(!check_local(u0, reg, open));

  Derivation pi = parse_proof(read_fixture("fig_pi_fwd.proof"), reg);
  for (std::size_t k = 0; k < 3; ++k) {
    Derivation small = unfold(pi, k);
    Derivation large = unfold(pi, k + 1);
    CHECK(is_approximation(small, large));
    CHECK(!is_approximation(large, small));
  }

  // Loop-free inputs are fixed points.
  Derivation mp = parse_proof(read_fixture("mp.proof"), reg);
  Derivation mu = unfold(mp, 2);
  CHECK(is_approximation(mu, mp));
  CHECK(is_approximation(mp, mu));
}

TEST_CASE("decomposition designates progressing boxes") {
  OpSemRegistry reg = pi_registry();
  Derivation mp = parse_proof(read_fixture("mp.proof"), reg);
  CHECK(decompose(mp, reg).open_premises.empty());

  Derivation li = parse_proof(read_fixture("loop_invariance.proof"), reg);
  DecomposeResult r = decompose(li, reg);
  REQUIRE(r.open_premises.size() == 1);
  const auto& [seq, box] = r.open_premises[0];
  CHECK(contains(seq, box));
  REQUIRE(box->kind == FKind::Box);
  CHECK(box->prog->kind == ProgKind::Star);

  Derivation pi = parse_proof(read_fixture("fig_pi_fwd.proof"), reg);
  DecomposeResult rp = decompose(pi, reg);
  CHECK(!rp.open_premises.empty());
  for (const auto& [seq2, box2] : rp.open_premises) {
    CHECK(contains(seq2, box2));
    REQUIRE(box2->kind == FKind::Box);
    CHECK(box2->prog->kind == ProgKind::Foreign);
  }
}

TEST_CASE("the atomic-K option restricts modality programs") {
  OpSemRegistry reg = base_registry();
  auto a = p_inst("a"), b = p_inst("b");
  Derivation d;
  d.root = "n0";
  ProofNode kn = node({f_box(p_seq(a, b), f_pos("p"))}, RuleId::K);
  kn.rule.k_prog = p_seq(a, b);
  kn.rule.premises = {"n1"};
  d.nodes["n0"] = kn;
  d.nodes["n1"] = node({f_pos("p")}, RuleId::Open);
  CheckOptions open;
  open.allow_open = true;
  CHECK(!check_local(d, reg, open));
  CheckOptions atomic = open;
  atomic.atomic_k = true;
  CHECK(check_local(d, reg, atomic).has_value());
}

TEST_CASE("accepted cut-free Kleene derivations are analytic") {
  OpSemRegistry reg = base_registry();
  for (const std::string name :
       {"ax_star.proof", "ax_seq.proof", "ax_choice.proof", "nec.proof"}) {
    Derivation d = parse_proof(read_fixture(name), reg);
    FlResult fl = fl_closure(d.nodes.at(d.root).sequent, reg, 100000);
    REQUIRE(!fl.budget_exceeded);
    for (const auto& [id, n] : d.nodes) CHECK(is_subset(n.sequent, fl.closure));
  }
}
