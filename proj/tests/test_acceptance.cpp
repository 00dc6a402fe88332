// End-to-end acceptance checks. Each test case prints exactly one
// "criterion N (...): PASS|FAIL" line.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "doctest.h"
#include "helpers.hpp"
#include "opdl/cutelim.hpp"
#include "opdl/frontend.hpp"
#include "opdl/prover.hpp"

using namespace opdl;
using namespace opdl::testing;

namespace {

void verdict(int n, const char* title, bool ok) {
  std::cout << "criterion " << n << " (" << title
            << "): " << (ok ? "PASS" : "FAIL") << std::endl;
  CHECK(ok);
}

// Tracks the first failure description for diagnostics.
struct Gate {
  bool ok = true;
  std::string first;
  bool require(bool cond, const std::string& what) {
    if (!cond && ok) first = what;
    ok = ok && cond;
    return cond;
  }
  void finish(int n, const char* title) {
    if (!ok) std::cout << "  first failure: " << first << "\n";
    verdict(n, title, ok);
  }
};

bool has_foreign_p(const ProgramPtr& p);

bool has_foreign_f(const FormulaPtr& f) {
  if (!f) return false;
  return has_foreign_p(f->prog) || has_foreign_f(f->left) ||
         has_foreign_f(f->right);
}

bool has_foreign_p(const ProgramPtr& p) {
  if (!p) return false;
  if (p->kind == ProgKind::Foreign) return true;
  return has_foreign_f(p->test) || has_foreign_p(p->left) ||
         has_foreign_p(p->right);
}

const std::vector<std::string>& proof_fixtures() {
  static std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(fixtures_dir()))
      if (e.path().extension() == ".proof")
        out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
  }();
  return names;
}

bool sequent_holds(const KripkeFrame& fr, const Sequent& s,
                   const OpSemRegistry& reg, bool* eval_ok) {
  auto v = is_valid(fr, s, reg, 20000);
  *eval_ok = v.has_value();
  return v && *v;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("criterion 1") {
  Gate g;
  OpSemRegistry reg = base_registry();
  SearchBudget budget{120000, 2000, 120000};
  Rng rng(11);
  for (int scheme = 0; scheme < 8 && g.ok; ++scheme) {
    for (int i = 0; i < 50 && g.ok; ++i) {
      auto phi = gen_formula(rng, 1);
      auto psi = gen_formula(rng, 1);
      auto a = gen_program(rng, 3);
      auto b = gen_program(rng, 3);
      FormulaPtr f;
      switch (scheme) {
        case 0:  // duality of the modalities
          f = mk_iff(f_dia(a, phi), negate(f_box(a, negate(phi))));
          break;
        case 1:  // distribution over implication
          f = mk_implies(f_box(a, mk_implies(phi, psi)),
                         mk_implies(f_box(a, phi), f_box(a, psi)));
          break;
        case 2:  // empty program
          f = f_box(p_stuck(), phi);
          break;
        case 3:  // terminated program
          f = mk_iff(f_box(p_term(), phi), phi);
          break;
        case 4:  // test
          f = mk_iff(f_box(p_test(psi), phi), mk_implies(psi, phi));
          break;
        case 5:  // choice
          f = mk_iff(f_box(p_choice(a, b), phi),
                     f_and(f_box(a, phi), f_box(b, phi)));
          break;
        case 6:  // sequence
          f = mk_iff(f_box(p_seq(a, b), phi), f_box(a, f_box(b, phi)));
          break;
        default:  // iteration unfolding
          f = mk_iff(f_box(p_star(a), phi),
                     f_and(phi, f_box(a, f_box(p_star(a), phi))));
          break;
      }
      Sequent goal{f};
      ProveResult r = prove(goal, reg, budget);
      if (!g.require(r.status == ProveStatus::Proved,
                     "prove scheme " + std::to_string(scheme) + " #" +
                         std::to_string(i) + ": " + render(goal)))
        break;
      g.require(!check_proof(r.derivation, goal, reg),
                "kernel rejects proof of " + render(goal));
    }
  }
  for (const std::string name :
       {"ax_empty.proof", "ax_k.proof", "ax_eps.proof", "ax_test.proof",
        "ax_seq.proof", "ax_choice.proof", "ax_star.proof", "ax_o.proof"}) {
    Derivation d = parse_proof(read_fixture(name), reg);
    g.require(!check_proof(d, d.nodes.at(d.root).sequent, reg),
              name + " fails check");
  }
  g.finish(1, "axiom suite: prover + kernel");
}

TEST_CASE("criterion 2") {
  Gate g;
  OpSemRegistry reg = base_registry();
  Derivation d = parse_proof(read_fixture("unsound_cut.proof"), reg);
  g.require(!check_local(d, reg), "cyclic cut fails check_local");
  g.require(!check_progress(d, reg).progressing,
            "cyclic cut wrongly passes check_progress");
  auto cm = find_countermodel(f_pos("p"), reg, 1, 100, 7);
  if (g.require(cm.has_value(), "no countermodel for the conclusion")) {
    g.require(cm->frame.worlds == 1, "countermodel is not a 1-world frame");
    auto v = eval_formula(cm->frame, f_pos("p"), reg, 1000);
    g.require(v && !(*v)[cm->world], "countermodel does not refute p");
  }
  g.finish(2, "unsoundness rejection");
}

TEST_CASE("criterion 3") {
  Gate g;
  OpSemRegistry reg = pi_registry();
  CheckOptions open;
  open.allow_open = true;

  Derivation li = parse_proof(read_fixture("loop_invariance.proof"), reg);
  g.require(!check_proof(li, li.nodes.at(li.root).sequent, reg, open),
            "loop invariance fails");

  TemplateBindings tb;
  tb.formulas["phi"] = f_pos("p");
  tb.formulas["psi"] = f_pos("q");
  tb.programs["alpha"] = p_inst("a");
  tb.programs["beta"] = p_inst("b");
  tb.gamma = {f_pos("q")};
  for (std::size_t n = 0; n <= 3; ++n) {
    tb.n = n;
    Derivation d = derive_template("star-to-n", tb, reg);
    g.require(!check_proof(d, d.nodes.at(d.root).sequent, reg, open),
              "star-to-" + std::to_string(n) + " fails");
  }
  for (const std::string name :
       {"fig_pi_fwd.proof", "fig_pi_bwd.proof", "ax_o.proof",
        "chor_swap_fwd.proof", "chor_swap_bwd.proof", "chor_cond_fwd.proof",
        "chor_cond_bwd.proof"}) {
    Derivation d = parse_proof(read_fixture(name), reg);
    g.require(!check_proof(d, d.nodes.at(d.root).sequent, reg),
              name + " fails");
  }
  g.finish(3, "cyclic fixtures pass check_proof");
}

// ---------------------------------------------------------------------------

namespace {

struct RuleInstance {
  Sequent conclusion;
  std::vector<Sequent> premises;
};

std::optional<RuleInstance> make_instance(RuleId rid, Rng& rng,
                                          const OpSemRegistry& reg) {
  static const std::vector<std::string> atoms{"p", "q", "r"};
  Sequent side;
  for (std::size_t i = 0, n = pick(rng, 3); i < n; ++i)
    side.insert(gen_formula(rng, 2));
  auto phi = gen_formula(rng, 2);
  auto psi = gen_formula(rng, 1);
  auto alpha = gen_program(rng, 2);
  auto beta = gen_program(rng, 2);

  if (rid == RuleId::Cut) {
    Sequent delta;
    delta.insert(gen_formula(rng, 2));
    Sequent p1 = seq_plus(side, phi);
    Sequent p2 = seq_plus(delta, negate(phi));
    return RuleInstance{seq_union(side, delta), {p1, p2}};
  }

  RuleApp app;
  app.rule = rid;
  Sequent c = side;
  switch (rid) {
    case RuleId::Top:
      c.insert(f_top());
      break;
    case RuleId::Ax: {
      auto at = f_pos(atoms[pick(rng, atoms.size())]);
      c.insert(at);
      c.insert(negate(at));
      break;
    }
    case RuleId::W:
      app.principal = phi;
      c.insert(phi);
      break;
    case RuleId::Or: {
      auto f = f_or(phi, psi);
      app.principal = f;
      c.insert(f);
      break;
    }
    case RuleId::And: {
      auto f = f_and(phi, psi);
      app.principal = f;
      c.insert(f);
      break;
    }
    case RuleId::K: {
      c.clear();
      app.k_prog = alpha;
      for (std::size_t i = 0, m = pick(rng, 3); i < m; ++i)
        c.insert(f_dia(alpha, gen_formula(rng, 1)));
      c.insert(f_box(alpha, phi));
      break;
    }
    case RuleId::BoxEps:
      app.principal = f_box(p_term(), phi);
      c.insert(*app.principal);
      break;
    case RuleId::DiaEps:
      app.principal = f_dia(p_term(), phi);
      c.insert(*app.principal);
      break;
    case RuleId::BoxEmpty:
      c.insert(f_box(p_stuck(), phi));
      break;
    case RuleId::DiaEmpty:
      app.principal = f_dia(p_stuck(), phi);
      c.insert(*app.principal);
      break;
    case RuleId::BoxTest:
      app.principal = f_box(p_test(psi), phi);
      c.insert(*app.principal);
      break;
    case RuleId::DiaTest:
      app.principal = f_dia(p_test(psi), phi);
      c.insert(*app.principal);
      break;
    case RuleId::BoxChoice:
      app.principal = f_box(p_choice(alpha, beta), phi);
      c.insert(*app.principal);
      break;
    case RuleId::DiaChoice:
      app.principal = f_dia(p_choice(alpha, beta), phi);
      c.insert(*app.principal);
      break;
    case RuleId::BoxSeq:
      app.principal = f_box(p_seq(alpha, beta), phi);
      c.insert(*app.principal);
      break;
    case RuleId::DiaSeq:
      app.principal = f_dia(p_seq(alpha, beta), phi);
      c.insert(*app.principal);
      break;
    case RuleId::BoxStar:
      app.principal = f_box(p_star(alpha), phi);
      c.insert(*app.principal);
      break;
    case RuleId::DiaStar:
      app.principal = f_dia(p_star(alpha), phi);
      c.insert(*app.principal);
      break;
    case RuleId::BoxO:
    case RuleId::DiaO: {
      auto P = make_foreign("ccs", render_ccs(gen_ccs(rng, 2)), reg);
      if (P->kind != ProgKind::Foreign) return std::nullopt;
      auto f = rid == RuleId::BoxO ? f_box(P, phi) : f_dia(P, phi);
      app.principal = f;
      c.insert(f);
      break;
    }
    default:
      return std::nullopt;
  }
  auto prem = schema_premises(c, app, reg);
  if (!prem) return std::nullopt;
  return RuleInstance{c, *prem};
}

}  // namespace

TEST_CASE("criterion 4") {
  Gate g;
  OpSemRegistry reg = base_registry();
  static const std::vector<RuleId> rules{
      RuleId::Top,      RuleId::Ax,        RuleId::W,       RuleId::Or,
      RuleId::And,      RuleId::K,         RuleId::Cut,     RuleId::BoxEps,
      RuleId::BoxEmpty, RuleId::BoxTest,   RuleId::BoxChoice,
      RuleId::BoxSeq,   RuleId::BoxStar,   RuleId::DiaEps,  RuleId::DiaEmpty,
      RuleId::DiaTest,  RuleId::DiaChoice, RuleId::DiaSeq,  RuleId::DiaStar,
      RuleId::BoxO,     RuleId::DiaO};
  Rng rng(23);
  for (RuleId rid : rules) {
    std::vector<RuleInstance> insts;
    for (int tries = 0; tries < 40 && insts.size() < 3; ++tries)
      if (auto inst = make_instance(rid, rng, reg)) insts.push_back(*inst);
    if (!g.require(insts.size() == 3,
                   "could not instantiate rule " + rule_name(rid)))
      continue;
    int violations = 0;
    for (int f = 0; f < 200; ++f) {
      KripkeFrame fr = gen_frame(10000 + 200 * static_cast<int>(rid) + f);
      for (const RuleInstance& inst : insts) {
        bool eval_ok = true, all_premises = true;
        for (const Sequent& s : inst.premises) {
          bool e = true;
          all_premises = all_premises && sequent_holds(fr, s, reg, &e);
          eval_ok = eval_ok && e;
        }
        if (!eval_ok || !all_premises) continue;
        bool e = true;
        if (!sequent_holds(fr, inst.conclusion, reg, &e) && e) ++violations;
      }
    }
    g.require(violations == 0,
              rule_name(rid) + ": " + std::to_string(violations) +
                  " soundness violations");
  }
  g.finish(4, "per-rule local soundness on random frames");
}

// ---------------------------------------------------------------------------

namespace {

// Star-free formulas whose modalities carry instruction programs only; the
// prover's proofs of such goals are loop-free with one-step K rules, which
// is what the rewrite system requires.
FormulaPtr gen_flat(Rng& rng, std::size_t depth) {
  static const std::vector<std::string> atoms{"p", "q", "r"};
  static const std::vector<std::string> labels{"a", "b"};
  if (depth == 0) {
    switch (pick(rng, 4)) {
      case 0: return f_top();
      case 1: return f_bot();
      case 2: return f_pos(atoms[pick(rng, atoms.size())]);
      default: return f_neg(atoms[pick(rng, atoms.size())]);
    }
  }
  switch (pick(rng, 5)) {
    case 0: return f_or(gen_flat(rng, depth - 1), gen_flat(rng, depth - 1));
    case 1: return f_and(gen_flat(rng, depth - 1), gen_flat(rng, depth - 1));
    case 2:
      return f_box(p_inst(labels[pick(rng, labels.size())]),
                   gen_flat(rng, depth - 1));
    case 3:
      return f_dia(p_inst(labels[pick(rng, labels.size())]),
                   gen_flat(rng, depth - 1));
    default: return gen_flat(rng, 0);
  }
}

// Grafts `src` into `dst` with every node id prefixed, returning the new root.
std::string graft(Derivation& dst, const Derivation& src,
                  const std::string& prefix) {
  for (const auto& [id, n] : src.nodes) {
    ProofNode copy = n;
    for (auto& p : copy.rule.premises) p = prefix + p;
    if (copy.rule.loop_target) copy.rule.loop_target = prefix + *copy.rule.loop_target;
    dst.nodes[prefix + id] = copy;
  }
  return prefix + src.root;
}

// Cuts `d` (whose conclusion contains chi) against a fresh proof of
// {~chi, chi}; the multiplicative conclusion equals d's conclusion.
Derivation cut_against_dual(const Derivation& d, const FormulaPtr& chi,
                            const OpSemRegistry& reg, bool* built) {
  ProveResult r = prove({negate(chi), chi}, reg);
  *built = r.status == ProveStatus::Proved;
  if (!*built) return d;
  Derivation out;
  std::string l = graft(out, d, "l_");
  std::string rr = graft(out, r.derivation, "r_");
  ProofNode cut;
  cut.sequent = seq_union(seq_minus(out.nodes.at(l).sequent, chi),
                          seq_minus(out.nodes.at(rr).sequent, negate(chi)));
  cut.rule.rule = RuleId::Cut;
  cut.rule.cut_formula = chi;
  cut.rule.premises = {l, rr};
  out.nodes["cut"] = cut;
  out.root = "cut";
  return out;
}

bool has_cut(const Derivation& d) {
  for (const auto& [id, n] : d.nodes)
    if (n.rule.rule == RuleId::Cut) return true;
  return false;
}

}  // namespace

TEST_CASE("criterion 5") {
  Gate g;
  OpSemRegistry reg = base_registry();
  Rng rng(31);
  std::vector<Derivation> corpus;
  while (corpus.size() < 100 && g.ok) {
    Derivation d;
    switch (corpus.size() % 3) {
      case 0: {  // MP encodings
        TemplateBindings tb;
        tb.formulas["phi"] = gen_flat(rng, 2);
        tb.formulas["psi"] = gen_flat(rng, 2);
        tb.programs["alpha"] = p_inst("a");
        tb.programs["beta"] = p_inst("b");
        d = derive_template("MP", tb, reg);
        break;
      }
      case 1: {  // cut joins of two searched proofs
        FormulaPtr chi = gen_flat(rng, 2);
        FormulaPtr s1 = gen_flat(rng, 1);
        ProveResult left = prove({chi, negate(chi), s1}, reg);
        if (left.status != ProveStatus::Proved) continue;
        bool built = false;
        d = cut_against_dual(left.derivation, chi, reg, &built);
        if (!built) continue;
        break;
      }
      default: {  // a template composed with a further cut on its conclusion
        TemplateBindings tb;
        tb.formulas["phi"] = gen_flat(rng, 1);
        tb.formulas["psi"] = gen_flat(rng, 1);
        tb.programs["alpha"] = p_inst("a");
        tb.programs["beta"] = p_inst("b");
        Derivation mp = derive_template("MP", tb, reg);
        const Sequent& c = mp.nodes.at(mp.root).sequent;
        bool built = false;
        d = cut_against_dual(mp, *c.begin(), reg, &built);
        if (!built) continue;
        break;
      }
    }
    if (!has_cut(d)) continue;
    if (check_local(d, reg)) continue;
    corpus.push_back(d);
  }
  g.require(corpus.size() == 100, "could not build the 100-derivation corpus");

  for (std::size_t i = 0; i < corpus.size() && g.ok; ++i) {
    const Derivation& d = corpus[i];
    Sequent conclusion = d.nodes.at(d.root).sequent;
    EliminateResult r = eliminate(d, 2, 10000, reg);
    std::string tag = "derivation " + std::to_string(i);
    if (!g.require(!r.fuel_exhausted, tag + ": fuel exhausted")) continue;
    g.require(!has_cut(r.cut_free), tag + ": result has a cut");
    g.require(sequent_equal(r.cut_free.nodes.at(r.cut_free.root).sequent,
                            conclusion),
              tag + ": conclusion changed");
    g.require(!check_proof(r.cut_free, conclusion, reg),
              tag + ": result rejected by the kernel");
    for (std::size_t k = 0; k + 1 < r.trace.sigmas.size(); ++k)
      g.require(is_approximation(cf_prefix(r.trace.sigmas[k]),
                                 cf_prefix(r.trace.sigmas[k + 1])),
                tag + ": cut-free prefixes not monotone at step " +
                    std::to_string(k));
  }
  g.finish(5, "cut elimination on 100 derivations");
}

// ---------------------------------------------------------------------------

namespace {

// Closed, tau-free processes whose sums only join prefixed processes, so a
// state without transitions is always the terminated process 0.
CcsPtr gen_total(Rng& rng, std::size_t depth) {
  static const std::vector<std::string> acts{"a", "b", "c"};
  auto act = [&] { return CcsAction{CcsActKind::Act, acts[pick(rng, acts.size())]}; };
  if (depth == 0) return ccs_nil();
  switch (pick(rng, 3)) {
    case 0: return ccs_nil();
    case 1: return ccs_prefix(act(), gen_total(rng, depth - 1));
    default:
      return ccs_sum(ccs_prefix(act(), gen_total(rng, depth - 1)),
                     ccs_prefix(act(), gen_total(rng, depth - 1)));
  }
}

// Language-preserving rewrites: sum commutation/association/idempotence and
// prefix distribution over sums of prefixed (hence non-terminated) processes.
CcsPtr tweak(Rng& rng, const CcsPtr& p) {
  switch (p->kind) {
    case CcsKind::Prefix: {
      CcsPtr c = tweak(rng, p->left);
      if (c->kind == CcsKind::Sum && pick(rng, 2) == 0)
        return ccs_sum(ccs_prefix(p->act, c->left),
                       ccs_prefix(p->act, c->right));
      return ccs_prefix(p->act, c);
    }
    case CcsKind::Sum: {
      CcsPtr l = tweak(rng, p->left);
      CcsPtr r = tweak(rng, p->right);
      switch (pick(rng, 4)) {
        case 0: return ccs_sum(r, l);
        case 1: return ccs_sum(l, ccs_sum(l, r));
        case 2:
          if (r->kind == CcsKind::Sum)
            return ccs_sum(ccs_sum(l, r->left), r->right);
          return ccs_sum(l, r);
        default: return ccs_sum(l, r);
      }
    }
    default: return p;
  }
}

// Renames the first action prefix found (leftmost) to the fresh letter z.
CcsPtr poison(const CcsPtr& p, bool* done) {
  if (*done) return p;
  switch (p->kind) {
    case CcsKind::Prefix: {
      *done = true;
      return ccs_prefix({CcsActKind::Act, "z"}, p->left);
    }
    case CcsKind::Sum: {
      CcsPtr l = poison(p->left, done);
      return ccs_sum(l, *done ? p->right : poison(p->right, done));
    }
    default: return p;
  }
}

}  // namespace

TEST_CASE("criterion 6") {
  Gate g;
  OpSemRegistry reg = pi_registry();
  std::vector<std::pair<ProgramPtr, ProgramPtr>> pairs;
  auto ccs = [&](const std::string& t) { return make_foreign("ccs", t, reg); };
  auto chor = [&](const std::string& t) { return make_foreign("chor", t, reg); };

  pairs.emplace_back(ccs("P1"), ccs("P2"));
  pairs.emplace_back(ccs("a.(b.0 + c.0)"), ccs("a.b.0 + a.c.0"));
  pairs.emplace_back(ccs("a.0 + b.0"), parse_program("a + b", reg));
  pairs.emplace_back(ccs("new a in a.0"), p_stuck());
  pairs.emplace_back(chor("p.x := 1; q.y := 2; 0"),
                     chor("q.y := 2; p.x := 1; 0"));
  pairs.emplace_back(
      chor("if p.b { q.y := 2; p.x := 1; 0 } else { q.y := 2; 0 }; 0"),
      chor("q.y := 2; if p.b { p.x := 1; 0 } else { 0 }; 0"));
  pairs.emplace_back(ccs("a.b.0"), parse_program("a;b", reg));
  pairs.emplace_back(ccs("a.0"), ccs("b.0"));
  pairs.emplace_back(ccs("a.b.0 | c.0"), ccs("a.(b.0 | c.0)"));
  pairs.emplace_back(parse_program("a;b + abort", reg),
                     parse_program("a;b", reg));
  pairs.emplace_back(parse_program("a", reg), parse_program("a;skip", reg));

  Rng rng(41);
  int randoms = 0;
  while (randoms < 20) {
    CcsPtr base = gen_total(rng, 3);
    bool poisoned = false;
    CcsPtr other = randoms % 2 == 0 ? tweak(rng, tweak(rng, base))
                                    : poison(base, &poisoned);
    if (randoms % 2 == 1 && !poisoned) continue;  // no prefix to rename
    ProgramPtr p = ccs(render_ccs(base));
    ProgramPtr q = ccs(render_ccs(other));
    if (explore(p, reg, 21).states.size() > 20) continue;
    if (explore(q, reg, 21).states.size() > 20) continue;
    pairs.emplace_back(p, q);
    ++randoms;
  }
  g.require(pairs.size() >= 30, "fewer than 30 pairs");

  SearchBudget budget{120000, 2000, 120000};
  for (std::size_t i = 0; i < pairs.size() && g.ok; ++i) {
    const auto& [p, q] = pairs[i];
    std::string tag = "pair " + std::to_string(i) + " (" + render(p) + " vs " +
                      render(q) + ")";
    TraceVerdict v = trace_equiv(p, q, reg, 20000);
    if (!g.require(v.kind != TraceVerdictKind::Inconclusive,
                   tag + ": oracle inconclusive"))
      continue;
    auto [f, b] = prove_box_equiv(p, q, reg, budget);
    if (!g.require(f.status != ProveStatus::Exhausted &&
                       b.status != ProveStatus::Exhausted,
                   tag + ": prover exhausted"))
      continue;
    bool proved = f.status == ProveStatus::Proved &&
                  b.status == ProveStatus::Proved;
    g.require(proved == (v.kind == TraceVerdictKind::Equivalent),
              tag + ": prover and oracle disagree");
    if (v.kind == TraceVerdictKind::Distinguished) {
      bool on_p = trace_accepted(p, reg, v.witness);
      bool on_q = trace_accepted(q, reg, v.witness);
      g.require(on_p != on_q, tag + ": witness does not separate");
    }
  }
  g.finish(6, "certified equivalence matches the trace oracle");
}

TEST_CASE("criterion 7") {
  Gate g;
  OpSemRegistry reg = pi_registry();
  CheckOptions open;
  open.allow_open = true;
  int covered = 0;
  for (const std::string& name : proof_fixtures()) {
    Derivation d = parse_proof(read_fixture(name), reg);
    if (check_proof(d, d.nodes.at(d.root).sequent, reg, open)) continue;
    if (has_cut(d)) continue;  // the analyticity property is cut-free
    bool kleene = true;
    for (const auto& [id, n] : d.nodes)
      for (const auto& f : n.sequent) kleene = kleene && !has_foreign_f(f);
    if (!kleene) continue;
    ++covered;
    FlResult fl = fl_closure(d.nodes.at(d.root).sequent, reg, 100000);
    if (!g.require(!fl.budget_exceeded, name + ": closure budget exceeded"))
      continue;
    for (const auto& [id, n] : d.nodes)
      g.require(is_subset(n.sequent, fl.closure),
                name + ": node " + id + " escapes the closure");
  }
  g.require(covered >= 5, "fewer than 5 cut-free regular-program fixtures");
  g.finish(7, "analyticity of accepted cut-free derivations");
}

TEST_CASE("criterion 8") {
  Gate g;
  OpSemRegistry reg = pi_registry();
  Rng rng(77);
  std::vector<ProgramPtr> progs;
  while (progs.size() < 20) {
    ProgramPtr P =
        pick(rng, 3) == 0
            ? make_foreign("chor",
                           render_chor(gen_chor(rng, 3, {"p", "q"})), reg)
            : make_foreign("ccs",
                           render_ccs(gen_ccs(rng, 3, {"P1", "P2"})), reg);
    if (P->kind != ProgKind::Foreign) continue;
    Lts l = explore(P, reg, 16);
    if (l.truncated || l.states.size() > 15) continue;
    progs.push_back(P);
  }
  for (int i = 0; i < 100 && g.ok; ++i) {
    KripkeFrame fr = gen_frame(8000 + i);
    for (const ProgramPtr& P : progs) {
      FormulaPtr f = gen_formula(rng, 1);
      auto lhs = eval_formula(fr, f_box(P, f), reg, 20000);
      if (!g.require(lhs.has_value(), "box evaluation failed")) break;
      WorldSet rhs = ws_full(fr.worlds);
      for (const auto& [lab, nxt] : op_step(P, reg)) {
        auto part = eval_formula(fr, f_box(lab, f_box(nxt, f)), reg, 20000);
        if (!g.require(part.has_value(), "unfolding evaluation failed")) break;
        for (std::size_t w = 0; w < fr.worlds; ++w)
          rhs[w] = rhs[w] && (*part)[w];
      }
      g.require(*lhs == rhs,
                "unfolding mismatch on frame " + std::to_string(i) + " for " +
                    render(P));
    }
  }
  g.finish(8, "operational box equals its one-step unfolding");
}

TEST_CASE("criterion 9") {
  Gate g;
  ChorDefs none;
  Rng rng(91);
  for (int i = 0; i < 100 && g.ok; ++i) {
    ChorInstr i1 = gen_instr(rng, {"p", "q"});
    ChorInstr i2 = gen_instr(rng, {"r", "s"});
    ChorPtr rest = gen_chor(rng, 3, {"t", "u"});
    ChorPtr c = chor_seqi(i1, chor_seqi(i2, rest));
    ChorPtr after_12, after_21;
    for (const auto& [l, s] : chor_step(c, none)) {
      if (compare(l, i1) == 0)
        for (const auto& [l2, s2] : chor_step(s, none))
          if (compare(l2, i2) == 0) after_12 = s2;
      if (compare(l, i2) == 0)
        for (const auto& [l2, s2] : chor_step(s, none))
          if (compare(l2, i1) == 0) after_21 = s2;
    }
    std::string tag = "choreography " + std::to_string(i);
    if (!g.require(after_12 && after_21, tag + ": an interleaving is missing"))
      continue;
    g.require(compare(after_12, after_21) == 0, tag + ": no convergence");
  }
  g.finish(9, "out-of-order executions form diamonds");
}

TEST_CASE("criterion 10") {
  Gate g;
  OpSemRegistry reg = pi_registry();

  for (const std::string& name : proof_fixtures()) {
    Derivation d = parse_proof(read_fixture(name), reg);
    std::string r1 = render_proof(d);
    Derivation d2 = parse_proof(r1, reg);
    g.require(render_proof(d2) == r1, name + ": unstable rendering");
  }
  for (const auto& [name, body] : parse_ccs_file(read_fixture("pi.ccs")))
    g.require(compare(parse_ccs_term_strict(render_ccs(body)), body) == 0,
              "pi.ccs definition " + name);
  for (const auto& [name, body] : parse_chor_file(read_fixture("demo.chor")))
    g.require(compare(parse_chor_term_strict(render_chor(body)), body) == 0,
              "demo.chor definition " + name);
  {
    KripkeFrame fr = parse_frame_json(read_fixture("frame_two.json"));
    std::string r1 = render_frame_json(fr);
    g.require(render_frame_json(parse_frame_json(r1)) == r1,
              "frame_two.json: unstable rendering");
  }

  Rng rng(97);
  for (int i = 0; i < 500 && g.ok; ++i) {
    FormulaPtr f = gen_formula(rng, 6);
    g.require(equal(parse_formula(render(f), reg), f),
              "formula round-trip: " + render(f));
    ProgramPtr p = gen_program(rng, 6);
    g.require(equal(parse_program(render(p), reg), p),
              "program round-trip: " + render(p));
    CcsPtr c = gen_ccs(rng, 5, {"P1", "P2"});
    g.require(compare(parse_ccs_term_strict(render_ccs(c)), c) == 0,
              "process round-trip: " + render_ccs(c));
    ChorPtr h = gen_chor(rng, 5, {"p", "q", "r"});
    g.require(compare(parse_chor_term_strict(render_chor(h)), h) == 0,
              "choreography round-trip: " + render_chor(h));
  }
  g.finish(10, "parse/render round-trips");
}
