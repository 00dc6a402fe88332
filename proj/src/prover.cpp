#include "opdl/prover.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace opdl {

namespace {

// ---------------------------------------------------------------------------
// General search. The tree is built abstractly first (so choice points can
// backtrack cheaply) and materialized into a Derivation on success.

struct STree;
using STreeP = std::shared_ptr<STree>;

struct STree {
  Sequent seq;
  RuleId rule = RuleId::Open;
  std::optional<FormulaPtr> principal;
  std::optional<ProgramPtr> kprog;
  std::vector<STreeP> kids;
  int loop_depth = -1;  // index into the ancestor stack, for Loop
  bool anchor = false;  // marks the entry node of a search level
};

constexpr std::size_t kMaxStuckReported = 50;

struct Searcher {
  const OpSemRegistry& reg;
  SearchBudget budget;
  bool allow_fold;

  Searcher(const OpSemRegistry& r, const SearchBudget& b, bool fold)
      : reg(r), budget(b), allow_fold(fold) {}
  std::size_t visited = 0;
  bool exhausted = false;
  std::vector<Sequent> stuck;
  std::vector<Sequent> anc;
  std::map<FormulaPtr, std::size_t, FormulaLess> last_used;
  std::size_t tick = 0;

  static STreeP mk(Sequent s, RuleId r) {
    auto t = std::make_shared<STree>();
    t->seq = std::move(s);
    t->rule = r;
    return t;
  }

  // Weakening chain from a proof of a subset of `s` up to `s` itself.
  STreeP wrap(STreeP core, const Sequent& s) {
    STreeP cur = std::move(core);
    for (const auto& f : s) {
      if (contains(cur->seq, f)) continue;
      auto w = mk(seq_plus(cur->seq, f), RuleId::W);
      w->principal = f;
      w->kids = {cur};
      cur = w;
    }
    return cur;
  }

  STreeP closure(const Sequent& s) {
    if (contains(s, f_top())) return wrap(mk(Sequent{f_top()}, RuleId::Top), s);
    for (const auto& f : s) {
      FormulaPtr nf = negate(f);
      if (contains(s, nf)) return wrap(mk(Sequent{f, nf}, RuleId::Ax), s);
    }
    for (const auto& f : s)
      if (f->kind == FKind::Box && f->prog->kind == ProgKind::Stuck)
        return wrap(mk(Sequent{f}, RuleId::BoxEmpty), s);
    for (const auto& f : s) {
      if (f->kind != FKind::Box || f->prog->kind == ProgKind::Terminated ||
          f->prog->kind == ProgKind::Stuck)
        continue;
      if (op_step(f->prog, reg).empty()) {
        auto t = mk(s, RuleId::BoxO);
        t->principal = f;
        return t;
      }
    }
    return nullptr;
  }

  STreeP attempt(const Sequent& s, std::size_t depth) {
    if (visited >= budget.max_distinct_sequents || depth >= budget.max_depth) {
      exhausted = true;
      return nullptr;
    }
    ++visited;
    if (auto c = closure(s)) return c;
    if (allow_fold) {
      for (int i = static_cast<int>(anc.size()) - 1; i >= 0; --i) {
        if (sequent_equal(anc[i], s)) {
          auto t = mk(s, RuleId::Loop);
          t->loop_depth = i;
          return t;
        }
      }
    }
    anc.push_back(s);
    STreeP result;
    auto inv = invertible(s, depth);
    if (inv.has_value())
      result = *inv;  // an invertible rule fired; failure below it is final
    else
      result = kstage(s, depth);
    anc.pop_back();
    if (result) {
      result->anchor = true;
    } else if (!exhausted && stuck.size() < kMaxStuckReported) {
      stuck.push_back(s);
    }
    return result;
  }

  // The rule (if any) an invertible step on `f` inside `s` would apply,
  // together with its premises.
  std::optional<std::pair<RuleId, std::vector<Sequent>>> plan(
      const Sequent& s, const FormulaPtr& f) {
    {
      std::optional<RuleId> rule;
      std::vector<Sequent> premises;
      Sequent rest = seq_minus(s, f);
      auto one = [&](RuleId r, std::initializer_list<FormulaPtr> actives) {
        rule = r;
        Sequent p = rest;
        for (const auto& a : actives) p.insert(a);
        premises = {std::move(p)};
      };
      switch (f->kind) {
        case FKind::Or:
          one(RuleId::Or, {f->left, f->right});
          break;
        case FKind::And:
          rule = RuleId::And;
          premises = {seq_plus(rest, f->left), seq_plus(rest, f->right)};
          break;
        case FKind::Box:
          switch (f->prog->kind) {
            case ProgKind::Terminated:
              one(RuleId::BoxEps, {f->left});
              break;
            case ProgKind::Test:
              one(RuleId::BoxTest, {f_or(negate(f->prog->test), f->left)});
              break;
            case ProgKind::Seq:
              one(RuleId::BoxSeq,
                  {f_box(f->prog->left, f_box(f->prog->right, f->left))});
              break;
            case ProgKind::Choice:
              rule = RuleId::BoxChoice;
              premises = {seq_plus(rest, f_box(f->prog->left, f->left)),
                          seq_plus(rest, f_box(f->prog->right, f->left))};
              break;
            case ProgKind::Star:
              rule = RuleId::BoxStar;
              premises = {
                  seq_plus(rest, f->left),
                  seq_plus(rest, f_box(p_seq(f->prog->left, f->prog), f->left))};
              break;
            case ProgKind::Foreign: {
              rule = RuleId::BoxO;
              for (const auto& [l, nx] : op_step(f->prog, reg))
                premises.push_back(
                    seq_plus(rest, f_box(l, f_box(nx, f->left))));
              break;
            }
            default:
              break;  // Stuck closed earlier; Inst waits for K
          }
          break;
        case FKind::Dia:
          switch (f->prog->kind) {
            case ProgKind::Terminated:
              one(RuleId::DiaEps, {f->left});
              break;
            case ProgKind::Stuck:
              if (rest.empty()) break;
              rule = RuleId::DiaEmpty;
              premises = {rest};
              break;
            case ProgKind::Test:
              one(RuleId::DiaTest, {f_and(f->prog->test, f->left)});
              break;
            case ProgKind::Seq:
              one(RuleId::DiaSeq,
                  {f_dia(f->prog->left, f_dia(f->prog->right, f->left))});
              break;
            case ProgKind::Choice:
              one(RuleId::DiaChoice,
                  {f_dia(f->prog->left, f->left), f_dia(f->prog->right, f->left)});
              break;
            case ProgKind::Star:
              one(RuleId::DiaStar,
                  {f->left, f_dia(p_seq(f->prog->left, f->prog), f->left)});
              break;
            case ProgKind::Foreign: {
              auto steps = op_step(f->prog, reg);
              if (steps.empty() && rest.empty()) break;
              rule = RuleId::DiaO;
              Sequent p = rest;
              for (const auto& [l, nx] : steps)
                p.insert(f_dia(l, f_dia(nx, f->left)));
              premises = {std::move(p)};
              break;
            }
            default:
              break;
          }
          break;
        default:
          break;  // literals and falsum carry no rule
      }
      if (!rule) return std::nullopt;
      return std::make_pair(*rule, std::move(premises));
    }
  }

  // Engaged optional: some invertible rule applies (value may still be null
  // if a branch fails). Disengaged: no invertible rule; try K. Among the
  // applicable formulas the least recently unfolded one on this branch is
  // chosen, so cyclic branches unfold every formula fairly and folded
  // cycles carry every available thread.
  std::optional<STreeP> invertible(const Sequent& s, std::size_t depth) {
    FormulaPtr best;
    std::pair<RuleId, std::vector<Sequent>> best_plan;
    std::size_t best_used = 0;
    for (const auto& f : s) {
      auto pl = plan(s, f);
      if (!pl) continue;
      auto it = last_used.find(f);
      std::size_t used = it == last_used.end() ? 0 : it->second;
      if (!best || used < best_used) {
        best = f;
        best_plan = std::move(*pl);
        best_used = used;
      }
    }
    if (!best) return std::nullopt;
    std::size_t saved = best_used;
    last_used[best] = ++tick;
    auto done = [&] { last_used[best] = saved; };
    std::vector<STreeP> kids;
    for (const auto& p : best_plan.second) {
      auto kid = attempt(p, depth + 1);
      if (!kid) {
        done();
        return STreeP(nullptr);
      }
      kids.push_back(kid);
    }
    done();
    auto t = mk(s, best_plan.first);
    t->principal = best;
    t->kids = std::move(kids);
    return t;
  }

  STreeP kstage(const Sequent& s, std::size_t depth) {
    for (const auto& f : s) {
      if (f->kind != FKind::Box || f->prog->kind != ProgKind::Inst) continue;
      Sequent core{f};
      Sequent prem{f->left};
      for (const auto& g : s) {
        if (g->kind == FKind::Dia && equal(g->prog, f->prog)) {
          core.insert(g);
          prem.insert(g->left);
        }
      }
      auto kid = attempt(prem, depth + 1);
      if (!kid) continue;
      auto kn = mk(core, RuleId::K);
      kn->kprog = f->prog;
      kn->kids = {kid};
      return wrap(kn, s);
    }
    return nullptr;
  }
};

std::string emit(Derivation& d, std::size_t& counter, const STree& t,
                 std::vector<std::string>& anchors) {
  std::string id = "n" + std::to_string(counter++);
  ProofNode pn;
  pn.sequent = t.seq;
  pn.rule.rule = t.rule;
  if (t.principal) pn.rule.principal = t.principal;
  if (t.kprog) pn.rule.k_prog = t.kprog;
  if (t.rule == RuleId::Loop) pn.rule.loop_target = anchors.at(t.loop_depth);
  d.nodes[id] = pn;  // premises filled below (map entry stays stable)
  if (t.anchor) anchors.push_back(id);
  std::vector<std::string> kids;
  for (const auto& k : t.kids) kids.push_back(emit(d, counter, *k, anchors));
  if (t.anchor) anchors.pop_back();
  d.nodes[id].rule.premises = std::move(kids);
  return id;
}

Derivation materialize(const STree& t) {
  Derivation d;
  std::size_t counter = 0;
  std::vector<std::string> anchors;
  d.root = emit(d, counter, t, anchors);
  return d;
}

}  // namespace

ProveResult prove(const Sequent& goal, const OpSemRegistry& reg,
                  const SearchBudget& budget) {
  ProveResult res;
  bool any_exhausted = false;
  bool any_unsound = false;
  for (bool fold : {true, false}) {
    Searcher s{reg, budget, fold};
    STreeP t = s.attempt(goal, 0);
    if (t) {
      Derivation d = materialize(*t);
      if (!check_proof(d, goal, reg)) {
        res.status = ProveStatus::Proved;
        res.derivation = std::move(d);
        return res;
      }
      any_unsound = true;  // fold produced a non-progressing cycle; retry
      continue;
    }
    if (s.exhausted) {
      any_exhausted = true;
      continue;
    }
    // A definite failure: stuck leaves with no budget pressure.
    res.status = ProveStatus::Failed;
    res.stuck = std::move(s.stuck);
    return res;
  }
  res.status = (any_exhausted || any_unsound) ? ProveStatus::Exhausted
                                              : ProveStatus::Failed;
  return res;
}

// ---------------------------------------------------------------------------
// Trace-inclusion certificates.

namespace {

struct UpStep {
  Sequent conclusion;
  RuleId rule;
  std::optional<FormulaPtr> principal;
  std::optional<ProgramPtr> kprog;
};

struct Sat {
  const OpSemRegistry& reg;
  SearchBudget budget;

  Sat(const OpSemRegistry& r, const SearchBudget& b) : reg(r), budget(b) {}
  Derivation d;
  std::size_t counter = 0;
  FormulaPtr at = f_pos("@phi");
  FormulaPtr nat = f_neg("@phi");
  bool exhausted = false;
  std::optional<Sequent> stuck;
  Trace witness;
  std::size_t visits = 0;
  std::size_t kcount = 0;

  struct PathEntry {
    std::string key;
    std::string id;
    std::size_t kcount;
  };
  std::vector<PathEntry> path;

  std::string fresh() { return "n" + std::to_string(counter++); }

  std::string add(Sequent s, RuleId r, std::vector<std::string> prem = {},
                  std::optional<FormulaPtr> principal = std::nullopt,
                  std::optional<ProgramPtr> kprog = std::nullopt,
                  std::optional<std::string> loop = std::nullopt) {
    std::string id = fresh();
    ProofNode pn;
    pn.sequent = std::move(s);
    pn.rule.rule = r;
    pn.rule.premises = std::move(prem);
    pn.rule.principal = std::move(principal);
    pn.rule.k_prog = std::move(kprog);
    pn.rule.loop_target = std::move(loop);
    d.nodes[id] = std::move(pn);
    return id;
  }

  FormulaPtr dia(const ProgramPtr& p) const { return f_dia(p, nat); }
  FormulaPtr box(const ProgramPtr& p) const { return f_box(p, at); }

  static void insert_prog(std::vector<ProgramPtr>& v, const ProgramPtr& p) {
    auto pos = std::lower_bound(v.begin(), v.end(), p,
                                [](const ProgramPtr& a, const ProgramPtr& b) {
                                  return compare(a, b) < 0;
                                });
    if (pos == v.end() || compare(*pos, p) != 0) v.insert(pos, p);
  }

  std::vector<ProgramPtr> eps_close(std::vector<ProgramPtr> s) const {
    std::sort(s.begin(), s.end(), [](const ProgramPtr& a, const ProgramPtr& b) {
      return compare(a, b) < 0;
    });
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (const auto& [l, nx] : op_step(s[i], reg))
        if (l->kind == ProgKind::Terminated) insert_prog(s, nx);
    }
    return s;
  }

  Sequent state_sequent(const std::vector<ProgramPtr>& s, const ProgramPtr& b) const {
    Sequent sq;
    for (const auto& p : s) sq.insert(dia(p));
    sq.insert(box(b));
    return sq;
  }

  // Upward steps taking `cur` (whose diamond set covers `have`) to the clean
  // state sequent for the epsilon-closed set `all`: wide dia_O to surface the
  // silent successors, dia_eps to unwrap them, weakening to drop the rest.
  std::vector<UpStep> closure_steps(Sequent cur, std::vector<ProgramPtr> have,
                                    const std::vector<ProgramPtr>& all,
                                    const ProgramPtr& b) const {
    std::vector<UpStep> steps;
    bool grew = true;
    while (have.size() < all.size() && grew) {
      grew = false;
      for (std::size_t i = 0; i < have.size() && !grew; ++i) {
        const ProgramPtr& src = have[i];
        auto trans = op_step(src, reg);
        bool fresh_silent = false;
        for (const auto& [l, nx] : trans)
          if (l->kind == ProgKind::Terminated && !contains(cur, dia(nx)))
            fresh_silent = true;
        if (!fresh_silent) continue;
        Sequent grown = cur;
        for (const auto& [l, nx] : trans) grown.insert(f_dia(l, dia(nx)));
        steps.push_back({cur, RuleId::DiaO, dia(src), std::nullopt});
        cur = grown;
        for (const auto& [l, nx] : trans) {
          if (l->kind != ProgKind::Terminated) continue;
          FormulaPtr rho = f_dia(l, dia(nx));
          if (!contains(cur, rho)) continue;
          steps.push_back({cur, RuleId::DiaEps, rho, std::nullopt});
          cur = seq_plus(seq_minus(cur, rho), dia(nx));
          insert_prog(have, nx);
        }
        grew = true;
      }
    }
    Sequent clean = state_sequent(all, b);
    const Sequent snapshot = cur;
    for (const auto& f : snapshot) {
      if (contains(clean, f)) continue;
      steps.push_back({cur, RuleId::W, f, std::nullopt});
      cur = seq_minus(cur, f);
    }
    return steps;
  }

  // Realizes `steps` below the node `top`; returns the bottom node id.
  std::string materialize_down(const std::vector<UpStep>& steps, std::string top) {
    std::string cur = std::move(top);
    for (auto it = steps.rbegin(); it != steps.rend(); ++it)
      cur = add(it->conclusion, it->rule, {cur}, it->principal, it->kprog);
    return cur;
  }

  std::optional<std::string> visit(const std::vector<ProgramPtr>& S,
                                   const ProgramPtr& b, Trace& labels) {
    if (++visits > budget.max_distinct_sequents ||
        path.size() >= budget.max_depth) {
      exhausted = true;
      return std::nullopt;
    }
    Sequent sq = state_sequent(S, b);
    for (const auto& p : S) {
      if (!equal(p, b)) continue;
      std::string core = add(Sequent{dia(b), box(b)}, RuleId::Ax);
      Sequent cs{dia(b), box(b)};
      for (const auto& f : sq) {
        if (contains(cs, f)) continue;
        cs.insert(f);
        core = add(cs, RuleId::W, {core}, f);
      }
      return core;
    }
    std::string key = render(sq);
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      if (it->key != key) continue;
      if (kcount > it->kcount)
        return add(sq, RuleId::Loop, {}, std::nullopt, std::nullopt, it->id);
      exhausted = true;  // silent cycle on the box side: no finite certificate
      return std::nullopt;
    }
    if (b->kind == ProgKind::Terminated) {
      stuck = sq;  // q can complete here but p cannot
      witness = labels;
      return std::nullopt;
    }
    auto tb = op_step(b, reg);
    if (tb.empty()) {
      if (b->kind == ProgKind::Stuck) {
        std::string core = add(Sequent{box(b)}, RuleId::BoxEmpty);
        Sequent cs{box(b)};
        for (const auto& f : sq) {
          if (contains(cs, f)) continue;
          cs.insert(f);
          core = add(cs, RuleId::W, {core}, f);
        }
        return core;
      }
      return add(sq, RuleId::BoxO, {}, box(b));
    }
    std::string myid = fresh();
    path.push_back({key, myid, kcount});
    std::vector<std::string> branches;
    for (const auto& [l, bp] : tb) {
      Sequent p0 = seq_plus(seq_minus(sq, box(b)), f_box(l, box(bp)));
      if (l->kind == ProgKind::Terminated) {
        auto up = visit(S, bp, labels);
        if (!up) {
          path.pop_back();
          return std::nullopt;
        }
        branches.push_back(add(p0, RuleId::BoxEps, {*up}, f_box(l, box(bp))));
        continue;
      }
      // Letter step: surface every diamond's transitions, keep the matching
      // ones, weaken the rest, cross K, then epsilon-close the successors.
      std::vector<ProgramPtr> matched;
      std::string lkey = render(l);
      for (const auto& dprog : S)
        for (const auto& [l2, nx] : op_step(dprog, reg))
          if (render(l2) == lkey) insert_prog(matched, nx);
      std::vector<ProgramPtr> closed = eps_close(matched);
      std::vector<UpStep> steps;
      Sequent cur = p0;
      for (const auto& dprog : S) {
        auto trans = op_step(dprog, reg);
        if (trans.empty()) continue;
        Sequent grown = cur;
        for (const auto& [l2, nx] : trans) grown.insert(f_dia(l2, dia(nx)));
        steps.push_back({cur, RuleId::DiaO, dia(dprog), std::nullopt});
        cur = grown;
      }
      Sequent core;
      for (const auto& m : matched) core.insert(f_dia(l, dia(m)));
      core.insert(f_box(l, box(bp)));
      const Sequent snapshot = cur;
      for (const auto& f : snapshot) {
        if (contains(core, f)) continue;
        steps.push_back({cur, RuleId::W, f, std::nullopt});
        cur = seq_minus(cur, f);
      }
      steps.push_back({core, RuleId::K, std::nullopt, l});
      Sequent r;
      for (const auto& m : matched) r.insert(dia(m));
      r.insert(box(bp));
      auto closing = closure_steps(r, matched, closed, bp);
      for (auto& st : closing) steps.push_back(std::move(st));
      ++kcount;
      labels.push_back(l);
      auto up = visit(closed, bp, labels);
      labels.pop_back();
      --kcount;
      if (!up) {
        path.pop_back();
        return std::nullopt;
      }
      branches.push_back(materialize_down(steps, *up));
    }
    path.pop_back();
    ProofNode pn;
    pn.sequent = sq;
    pn.rule.rule = RuleId::BoxO;
    pn.rule.principal = box(b);
    pn.rule.premises = std::move(branches);
    d.nodes[myid] = std::move(pn);
    return myid;
  }
};

}  // namespace

ProveResult prove_box_impl(const ProgramPtr& p, const ProgramPtr& q,
                           const OpSemRegistry& reg, const SearchBudget& budget) {
  ProveResult res;
  Sat sat{reg, budget};
  Sequent goal{sat.dia(p), sat.box(q)};
  std::vector<ProgramPtr> s0 = sat.eps_close({p});
  auto steps = sat.closure_steps(goal, {p}, s0, q);
  Trace labels;
  auto top = sat.visit(s0, q, labels);
  if (!top) {
    if (sat.exhausted || !sat.stuck) {
      res.status = ProveStatus::Exhausted;
      return res;
    }
    res.status = ProveStatus::Failed;
    res.stuck = {*sat.stuck};
    res.witness = sat.witness;
    return res;
  }
  sat.d.root = sat.materialize_down(steps, *top);
  if (check_proof(sat.d, goal, reg)) {
    res.status = ProveStatus::Exhausted;  // defensive: never emit an unchecked proof
    return res;
  }
  res.status = ProveStatus::Proved;
  res.derivation = std::move(sat.d);
  return res;
}

std::pair<ProveResult, ProveResult> prove_box_equiv(const ProgramPtr& p,
                                                    const ProgramPtr& q,
                                                    const OpSemRegistry& reg,
                                                    const SearchBudget& budget) {
  return {prove_box_impl(p, q, reg, budget), prove_box_impl(q, p, reg, budget)};
}

// ---------------------------------------------------------------------------
// Templates.

namespace {

struct TB {
  Derivation d;
  std::size_t counter = 0;

  std::string reserve() { return "n" + std::to_string(counter++); }

  void place(const std::string& id, Sequent s, RuleId r,
             std::vector<std::string> prem = {},
             std::optional<FormulaPtr> principal = std::nullopt,
             std::optional<ProgramPtr> kprog = std::nullopt,
             std::optional<FormulaPtr> cutf = std::nullopt,
             std::optional<std::string> loop = std::nullopt) {
    ProofNode pn;
    pn.sequent = std::move(s);
    pn.rule.rule = r;
    pn.rule.premises = std::move(prem);
    pn.rule.principal = std::move(principal);
    pn.rule.k_prog = std::move(kprog);
    pn.rule.cut_formula = std::move(cutf);
    pn.rule.loop_target = std::move(loop);
    d.nodes[id] = std::move(pn);
  }

  std::string add(Sequent s, RuleId r, std::vector<std::string> prem = {},
                  std::optional<FormulaPtr> principal = std::nullopt,
                  std::optional<ProgramPtr> kprog = std::nullopt,
                  std::optional<FormulaPtr> cutf = std::nullopt,
                  std::optional<std::string> loop = std::nullopt) {
    std::string id = reserve();
    place(id, std::move(s), r, std::move(prem), std::move(principal),
          std::move(kprog), std::move(cutf), std::move(loop));
    return id;
  }

  // Weakening chain from node `core` (proving `have`) up to `want`.
  std::string weaken(std::string core, Sequent have, const Sequent& want) {
    for (const auto& f : want) {
      if (contains(have, f)) continue;
      have.insert(f);
      core = add(have, RuleId::W, {core}, f);
    }
    return core;
  }
};

FormulaPtr need_formula(const TemplateBindings& b, const std::string& key) {
  auto it = b.formulas.find(key);
  if (it == b.formulas.end())
    throw std::invalid_argument("derive_template: missing formula binding '" +
                                key + "'");
  return it->second;
}

ProgramPtr need_program(const TemplateBindings& b, const std::string& key) {
  auto it = b.programs.find(key);
  if (it == b.programs.end())
    throw std::invalid_argument("derive_template: missing program binding '" +
                                key + "'");
  return it->second;
}

Derivation template_mp(const FormulaPtr& phi, const FormulaPtr& psi) {
  TB b;
  std::string axl = b.add(Sequent{phi, negate(phi)}, RuleId::Ax);
  Sequent right{negate(phi), psi, negate(psi)};
  std::string r = b.add(Sequent{psi, negate(psi)}, RuleId::Ax);
  r = b.weaken(r, Sequent{psi, negate(psi)}, right);
  Sequent conc = seq_union(seq_minus(Sequent{phi, negate(phi)}, phi),
                           seq_minus(right, negate(phi)));
  b.d.root = b.add(std::move(conc), RuleId::Cut, {axl, r}, std::nullopt,
                   std::nullopt, phi);
  return b.d;
}

Derivation template_nec(const FormulaPtr& phi, const ProgramPtr& alpha) {
  TB b;
  FormulaPtr lem = f_or(phi, negate(phi));
  if (alpha->kind == ProgKind::Stuck) {
    // K does not apply to abort; the box holds vacuously.
    b.d.root = b.add(Sequent{f_box(alpha, lem)}, RuleId::BoxEmpty);
    return b.d;
  }
  std::string ax = b.add(Sequent{phi, negate(phi)}, RuleId::Ax);
  std::string orn = b.add(Sequent{lem}, RuleId::Or, {ax}, lem);
  b.d.root = b.add(Sequent{f_box(alpha, lem)}, RuleId::K, {orn}, std::nullopt,
                   alpha);
  return b.d;
}

Derivation template_li(const FormulaPtr& phi, const ProgramPtr& alpha) {
  TB b;
  FormulaPtr nphi = negate(phi);
  ProgramPtr star = p_star(alpha);
  FormulaPtr inv = f_or(nphi, f_box(alpha, phi));
  FormulaPtr chi = f_box(star, inv);
  FormulaPtr boxstar = f_box(star, phi);
  FormulaPtr andf = f_and(phi, f_dia(alpha, nphi));
  FormulaPtr diapart = f_dia(star, andf);  // the dual of chi
  FormulaPtr boxab = f_box(alpha, boxstar);
  FormulaPtr diaseqf = f_dia(p_seq(alpha, star), andf);
  FormulaPtr diaa = f_dia(alpha, f_dia(star, andf));

  // Left: the rule hypothesis under a compound K.
  std::string open = b.add(Sequent{nphi, f_box(alpha, phi)}, RuleId::Open);
  std::string orn = b.add(Sequent{inv}, RuleId::Or, {open}, inv);
  std::string left = b.add(Sequent{chi}, RuleId::K, {orn}, std::nullopt, star);

  // Right: unfold the star, cycling back through a K over alpha.
  Sequent sstar{nphi, diapart, boxstar};
  std::string star_id = b.reserve();
  std::string ax1 = b.add(Sequent{nphi, phi}, RuleId::Ax);
  std::string w1 = b.add(Sequent{nphi, diapart, phi}, RuleId::W, {ax1}, diapart);
  Sequent sa{nphi, phi, diaa, boxab};
  std::string axa = b.add(Sequent{nphi, phi}, RuleId::Ax);
  std::string wa = b.weaken(axa, Sequent{nphi, phi}, sa);
  Sequent skb{f_dia(alpha, nphi), diaa, boxab};
  std::string kb;
  if (alpha->kind == ProgKind::Stuck) {
    // K does not apply to abort; the box holds vacuously, no cycle needed.
    std::string be = b.add(Sequent{boxab}, RuleId::BoxEmpty);
    kb = b.weaken(be, Sequent{boxab}, skb);
  } else {
    std::string loop = b.add(sstar, RuleId::Loop, {}, std::nullopt,
                             std::nullopt, std::nullopt, star_id);
    kb = b.add(skb, RuleId::K, {loop}, std::nullopt, alpha);
  }
  Sequent sb{nphi, f_dia(alpha, nphi), diaa, boxab};
  std::string wb = b.add(sb, RuleId::W, {kb}, nphi);
  Sequent s5{nphi, andf, diaa, boxab};
  std::string andn = b.add(s5, RuleId::And, {wa, wb}, andf);
  Sequent s4{nphi, andf, diaseqf, boxab};
  std::string dsq = b.add(s4, RuleId::DiaSeq, {andn}, diaseqf);
  Sequent s3{nphi, diapart, boxab};
  std::string dst = b.add(s3, RuleId::DiaStar, {dsq}, diapart);
  FormulaPtr seqbody = f_box(p_seq(alpha, star), phi);
  Sequent s2{nphi, diapart, seqbody};
  std::string bsq = b.add(s2, RuleId::BoxSeq, {dst}, seqbody);
  b.place(star_id, sstar, RuleId::BoxStar, {w1, bsq}, boxstar);

  b.d.root = b.add(Sequent{nphi, boxstar}, RuleId::Cut, {left, star_id},
                   std::nullopt, std::nullopt, chi);
  return b.d;
}

Derivation template_star_to_n(const std::vector<FormulaPtr>& gamma,
                              const ProgramPtr& alpha, const FormulaPtr& phi,
                              std::size_t n) {
  TB b;
  FormulaPtr nphi = negate(phi);
  ProgramPtr star = p_star(alpha);
  FormulaPtr boxstar = f_box(star, phi);
  FormulaPtr dias = f_dia(star, nphi);
  std::size_t m = gamma.size();

  // alpha^0 = skip, alpha^{k+1} = alpha ; alpha^k.
  std::vector<ProgramPtr> pw(n + 1);
  pw[0] = p_term();
  for (std::size_t k = 1; k <= n; ++k) pw[k] = p_seq(alpha, pw[k - 1]);

  // Suffix disjunctions of gamma.
  std::vector<FormulaPtr> suf(m);
  for (std::size_t i = m; i-- > 0;)
    suf[i] = (i + 1 == m) ? gamma[i] : f_or(gamma[i], suf[i + 1]);
  FormulaPtr chi = m == 0 ? boxstar : f_or(suf[0], boxstar);

  Sequent hyp;
  for (const auto& g : gamma) hyp.insert(g);
  hyp.insert(boxstar);
  std::string left = b.add(hyp, RuleId::Open);
  if (m > 0) {
    for (std::size_t i = m - 1; i-- > 0;) {
      Sequent s{suf[i], boxstar};
      for (std::size_t j = 0; j < i; ++j) s.insert(gamma[j]);
      left = b.add(std::move(s), RuleId::Or, {left}, suf[i]);
    }
    left = b.add(Sequent{chi}, RuleId::Or, {left}, chi);
  }

  // D'_k proves |- <alpha*>~phi, [alpha^k]phi.
  FormulaPtr diastep = f_dia(p_seq(alpha, star), nphi);
  std::string dk;
  if (alpha->kind == ProgKind::Stuck && n > 0) {
    // K does not apply to abort; only the outermost unfolding is needed,
    // since its box holds vacuously.
    FormulaPtr boxn = f_box(pw[n], phi);
    FormulaPtr boxn1 = f_box(pw[n - 1], phi);
    Sequent skn{f_dia(alpha, dias), f_box(alpha, boxn1)};
    std::string be = b.add(Sequent{f_box(alpha, boxn1)}, RuleId::BoxEmpty);
    std::string kn = b.weaken(be, Sequent{f_box(alpha, boxn1)}, skn);
    std::string bs = b.add(Sequent{f_dia(alpha, dias), boxn}, RuleId::BoxSeq,
                           {kn}, boxn);
    std::string dq = b.add(Sequent{diastep, boxn}, RuleId::DiaSeq, {bs}, diastep);
    std::string w = b.add(Sequent{nphi, diastep, boxn}, RuleId::W, {dq}, nphi);
    dk = b.add(Sequent{dias, boxn}, RuleId::DiaStar, {w}, dias);
  } else {
    std::string ax0 = b.add(Sequent{nphi, phi}, RuleId::Ax);
    FormulaPtr box0 = f_box(pw[0], phi);
    std::string be = b.add(Sequent{nphi, box0}, RuleId::BoxEps, {ax0}, box0);
    std::string w0 =
        b.add(Sequent{nphi, diastep, box0}, RuleId::W, {be}, diastep);
    dk = b.add(Sequent{dias, box0}, RuleId::DiaStar, {w0}, dias);
    for (std::size_t k = 1; k <= n; ++k) {
      FormulaPtr boxk = f_box(pw[k], phi);
      FormulaPtr boxk1 = f_box(pw[k - 1], phi);
      std::string kn = b.add(Sequent{f_dia(alpha, dias), f_box(alpha, boxk1)},
                             RuleId::K, {dk}, std::nullopt, alpha);
      std::string bs = b.add(Sequent{f_dia(alpha, dias), boxk}, RuleId::BoxSeq,
                             {kn}, boxk);
      std::string dq =
          b.add(Sequent{diastep, boxk}, RuleId::DiaSeq, {bs}, diastep);
      std::string w = b.add(Sequent{nphi, diastep, boxk}, RuleId::W, {dq}, nphi);
      dk = b.add(Sequent{dias, boxk}, RuleId::DiaStar, {w}, dias);
    }
  }

  FormulaPtr boxn = f_box(pw[n], phi);
  Sequent goal;
  for (const auto& g : gamma) goal.insert(g);
  goal.insert(boxn);

  std::string right;
  if (m == 0) {
    right = dk;
  } else {
    // Negated suffix conjunctions.
    std::vector<FormulaPtr> nsuf(m);
    for (std::size_t i = 0; i < m; ++i) nsuf[i] = negate(suf[i]);
    FormulaPtr nchi = negate(chi);
    // Branch b: weaken gamma onto D'_n.
    std::string pb = b.weaken(dk, Sequent{dias, boxn}, seq_plus(goal, dias));
    // Branch a: conjunction of the negated side formulas against gamma.
    std::string pa;
    {
      std::string cur;
      for (std::size_t i = m; i-- > 0;) {
        Sequent axs{gamma[i], negate(gamma[i])};
        std::string leafi = b.add(axs, RuleId::Ax);
        Sequent want = seq_plus(goal, negate(gamma[i]));
        std::string closed = b.weaken(leafi, axs, want);
        if (i + 1 == m) {
          cur = closed;
        } else {
          Sequent conc = seq_plus(goal, nsuf[i]);
          cur = b.add(std::move(conc), RuleId::And, {closed, cur}, nsuf[i]);
        }
      }
      pa = cur;
    }
    Sequent r = seq_plus(goal, nchi);
    right = b.add(std::move(r), RuleId::And, {pa, pb}, nchi);
  }

  b.d.root = b.add(goal, RuleId::Cut, {left, right}, std::nullopt, std::nullopt,
                   chi);
  return b.d;
}

Derivation proved_or_throw(const std::string& name, const FormulaPtr& f,
                           const OpSemRegistry& reg) {
  ProveResult r = prove(Sequent{f}, reg);
  if (r.status != ProveStatus::Proved)
    throw std::runtime_error("derive_template: search failed to close '" +
                             name + "'");
  return std::move(r.derivation);
}

}  // namespace

Derivation derive_template(const std::string& name, const TemplateBindings& b,
                           const OpSemRegistry& reg) {
  if (name == "A-empty") {
    TB t;
    t.d.root =
        t.add(Sequent{f_box(p_stuck(), need_formula(b, "phi"))}, RuleId::BoxEmpty);
    return t.d;
  }
  if (name == "MP") return template_mp(need_formula(b, "phi"), need_formula(b, "psi"));
  if (name == "NEC") return template_nec(need_formula(b, "phi"), need_program(b, "alpha"));
  if (name == "LI") return template_li(need_formula(b, "phi"), need_program(b, "alpha"));
  if (name == "star-to-n")
    return template_star_to_n(b.gamma, need_program(b, "alpha"),
                              need_formula(b, "phi"), b.n);
  if (name == "K") {
    FormulaPtr phi = need_formula(b, "phi"), psi = need_formula(b, "psi");
    ProgramPtr a = need_program(b, "alpha");
    FormulaPtr ax = mk_implies(f_box(a, mk_implies(phi, psi)),
                               mk_implies(f_box(a, phi), f_box(a, psi)));
    return proved_or_throw(name, ax, reg);
  }
  if (name == "A-eps") {
    FormulaPtr phi = need_formula(b, "phi");
    return proved_or_throw(name, mk_iff(f_box(p_term(), phi), phi), reg);
  }
  if (name == "A-test") {
    FormulaPtr phi = need_formula(b, "phi"), psi = need_formula(b, "psi");
    return proved_or_throw(
        name, mk_iff(f_box(p_test(psi), phi), mk_implies(psi, phi)), reg);
  }
  if (name == "A-seq") {
    FormulaPtr phi = need_formula(b, "phi");
    ProgramPtr a = need_program(b, "alpha"), c = need_program(b, "beta");
    return proved_or_throw(
        name, mk_iff(f_box(p_seq(a, c), phi), f_box(a, f_box(c, phi))), reg);
  }
  if (name == "A-choice") {
    FormulaPtr phi = need_formula(b, "phi");
    ProgramPtr a = need_program(b, "alpha"), c = need_program(b, "beta");
    return proved_or_throw(
        name,
        mk_iff(f_box(p_choice(a, c), phi), f_and(f_box(a, phi), f_box(c, phi))),
        reg);
  }
  if (name == "A-star") {
    FormulaPtr phi = need_formula(b, "phi");
    ProgramPtr a = need_program(b, "alpha");
    FormulaPtr bs = f_box(p_star(a), phi);
    return proved_or_throw(name, mk_iff(bs, f_and(phi, f_box(a, bs))), reg);
  }
  if (name == "A-O") {
    FormulaPtr phi = need_formula(b, "phi");
    ProgramPtr a = need_program(b, "alpha");
    auto steps = op_step(a, reg);
    FormulaPtr rhs = f_top();
    for (std::size_t i = steps.size(); i-- > 0;) {
      FormulaPtr t = f_box(steps[i].first, f_box(steps[i].second, phi));
      rhs = (i + 1 == steps.size()) ? t : f_and(t, rhs);
    }
    return proved_or_throw(name, mk_iff(f_box(a, phi), rhs), reg);
  }
  throw std::invalid_argument("derive_template: unknown template '" + name + "'");
}

}  // namespace opdl
