#include "opdl/cutelim.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace opdl {

namespace {

const std::pair<StepChoice, const char*> kStepNames[] = {
    {StepChoice::WeakLeft, "weak-left"},
    {StepChoice::WeakRight, "weak-right"},
    {StepChoice::AxLeft, "ax-left"},
    {StepChoice::AxRight, "ax-right"},
    {StepChoice::EpsKey, "eps-key"},
    {StepChoice::EmptyKey, "empty-key"},
    {StepChoice::TestKey, "test-key"},
    {StepChoice::KKey, "k-key"},
    {StepChoice::ChoiceKey, "choice-key"},
    {StepChoice::SeqKey, "seq-key"},
    {StepChoice::StarKey, "star-key"},
    {StepChoice::AndOrKey, "and-or-key"},
    {StepChoice::OKey, "O-key"},
    {StepChoice::CommuteLeftUnary, "commute-left-unary"},
    {StepChoice::CommuteLeftBinary, "commute-left-binary"},
    {StepChoice::CommuteRightUnary, "commute-right-unary"},
    {StepChoice::CommuteRightBinary, "commute-right-binary"},
};

[[noreturn]] void inapplicable(const std::string& why) {
  throw std::invalid_argument("cut-elimination step not applicable: " + why);
}

}  // namespace

std::string step_name(StepChoice c) {
  for (auto& [s, n] : kStepNames)
    if (s == c) return n;
  return "?";
}

const std::vector<StepChoice>& step_order() {
  static const std::vector<StepChoice> order = [] {
    std::vector<StepChoice> v;
    for (auto& [s, _] : kStepNames) v.push_back(s);
    return v;
  }();
  return order;
}

namespace {

// Shared machinery for constructing reducts in place of a cut node.
struct Rewriter {
  Derivation out;
  const OpSemRegistry& reg;
  std::size_t counter = 0;

  const Sequent& seq(const std::string& id) const { return out.nodes.at(id).sequent; }
  const RuleApp& rule(const std::string& id) const { return out.nodes.at(id).rule; }

  std::string fresh() {
    std::string id;
    do {
      id = "e" + std::to_string(counter++);
    } while (out.nodes.count(id));
    return id;
  }

  std::string mk(Sequent s, RuleApp r) {
    std::string id = fresh();
    out.nodes[id] = ProofNode{std::move(s), std::move(r)};
    return id;
  }

  // Deep copy with fresh ids (for subtrees that must appear more than once).
  std::string copy_subtree(const std::string& id) {
    const ProofNode& node = out.nodes.at(id);
    RuleApp r = node.rule;
    std::vector<std::string> kids;
    for (const auto& p : r.premises) kids.push_back(copy_subtree(p));
    r.premises = std::move(kids);
    return mk(node.sequent, std::move(r));
  }

  // Chain of weakenings turning a proof of a subset into a proof of `want`.
  std::string weaken_to(const std::string& top, const Sequent& want) {
    Sequent have = seq(top);
    if (!is_subset(have, want)) inapplicable("conclusion repair needs a non-superset");
    std::string cur = top;
    Sequent cur_seq = have;
    for (const auto& f : want) {
      if (contains(cur_seq, f)) continue;
      cur_seq = seq_plus(cur_seq, f);
      RuleApp w;
      w.rule = RuleId::W;
      w.principal = f;
      w.premises = {cur};
      cur = mk(cur_seq, std::move(w));
    }
    return cur;
  }

  std::string mk_cut(const std::string& l, const std::string& r,
                     const FormulaPtr& chi) {
    FormulaPtr nchi = negate(chi);
    if (!contains(seq(l), chi) || !contains(seq(r), nchi))
      inapplicable("inner cut premises lack the cut pair");
    Sequent c = seq_union(seq_minus(seq(l), chi), seq_minus(seq(r), nchi));
    RuleApp app;
    app.rule = RuleId::Cut;
    app.cut_formula = chi;
    app.premises = {l, r};
    return mk(std::move(c), std::move(app));
  }

  // Principal of a node's rule: the annotation when present, otherwise the
  // unique formula of the conclusion whose schema matches the premise count.
  FormulaPtr principal_of(const std::string& id) {
    const ProofNode& node = out.nodes.at(id);
    if (node.rule.principal) return *node.rule.principal;
    for (const auto& f : node.sequent) {
      RuleApp probe = node.rule;
      probe.principal = f;
      auto prem = schema_premises(node.sequent, probe, reg);
      if (prem && prem->size() == node.rule.premises.size()) return f;
    }
    inapplicable("cannot determine the principal of " + rule_name(node.rule.rule));
  }

  // Overwrites `id` with the content of `src` and deletes `src`.
  void move_into(const std::string& id, const std::string& src) {
    if (src == id) return;
    out.nodes[id] = out.nodes.at(src);
    out.nodes.erase(src);
  }

  void gc() {
    std::set<std::string> live;
    std::deque<std::string> frontier{out.root};
    live.insert(out.root);
    while (!frontier.empty()) {
      std::string id = frontier.front();
      frontier.pop_front();
      for (const auto& p : out.nodes.at(id).rule.premises)
        if (live.insert(p).second) frontier.push_back(p);
    }
    for (auto it = out.nodes.begin(); it != out.nodes.end();)
      it = live.count(it->first) ? std::next(it) : out.nodes.erase(it);
  }
};

struct CutView {
  std::string node;    // the cut
  std::string l, r;    // premise ids
  FormulaPtr chi;      // in l
  FormulaPtr nchi;     // in r
  Sequent conclusion;
};

CutView view_cut(const Derivation& d, const std::string& node) {
  const ProofNode& n = d.nodes.at(node);
  if (n.rule.rule != RuleId::Cut || !n.rule.cut_formula ||
      n.rule.premises.size() != 2)
    inapplicable("node is not a cut");
  return {node, n.rule.premises[0], n.rule.premises[1], *n.rule.cut_formula,
          negate(*n.rule.cut_formula), n.sequent};
}

// Is `rid` the box-modality counterpart of the key for this cut formula?
bool principal_matches(Rewriter& rw, const std::string& id, RuleId rid,
                       const FormulaPtr& want) {
  const RuleApp& r = rw.rule(id);
  if (r.rule != rid) return false;
  FormulaPtr p = r.principal ? *r.principal : nullptr;
  if (!p) {
    if (!contains(rw.seq(id), want)) return false;
    RuleApp probe = r;
    probe.principal = want;
    auto prem = schema_premises(rw.seq(id), probe, rw.reg);
    return prem.has_value();
  }
  return equal(p, want);
}

// Locates the (box side, dia side) orientation of a principal-pair key.
// Returns (box node id, dia node id, box cut formula) or nullopt.
struct KeySides {
  std::string box_id, dia_id;
  FormulaPtr box_formula;
};

std::optional<KeySides> key_sides(Rewriter& rw, const CutView& cv, RuleId box_rule,
                                  RuleId dia_rule) {
  if (cv.chi->kind == FKind::Box && principal_matches(rw, cv.l, box_rule, cv.chi) &&
      principal_matches(rw, cv.r, dia_rule, cv.nchi))
    return KeySides{cv.l, cv.r, cv.chi};
  if (cv.nchi->kind == FKind::Box && principal_matches(rw, cv.r, box_rule, cv.nchi) &&
      principal_matches(rw, cv.l, dia_rule, cv.chi))
    return KeySides{cv.r, cv.l, cv.nchi};
  return std::nullopt;
}

std::string premise_of(Rewriter& rw, const std::string& id, std::size_t i) {
  return rw.rule(id).premises.at(i);
}

// Weakening target: the narrow schema premise when it fits, else the wide one.
std::string repair_to_schema(Rewriter& rw, const std::string& proof,
                             const Sequent& conclusion, const RuleApp& app,
                             std::size_t i) {
  auto prem = schema_premises(conclusion, app, rw.reg);
  if (!prem || i >= prem->size()) inapplicable("rule does not fit the conclusion");
  const Sequent& narrow = (*prem)[i];
  if (is_subset(rw.seq(proof), narrow)) return rw.weaken_to(proof, narrow);
  Sequent wide = seq_union(conclusion, narrow);
  return rw.weaken_to(proof, wide);
}

// Rebuilds rule `app` (taken from `src_node`) at the cut's conclusion, with
// each original premise subtree optionally replaced.
void rebuild_rule_at(Rewriter& rw, const CutView& cv, const std::string& src_node,
                     const std::vector<std::string>& new_premises) {
  RuleApp app = rw.rule(src_node);
  if (app.rule == RuleId::Cut) {
    // Inner cuts are rebuilt directly: their conclusion is determined by the
    // premises rather than by a schema.
    RuleApp out = app;
    out.premises = new_premises;
    FormulaPtr xi = *app.cut_formula;
    if (!contains(rw.seq(new_premises[0]), xi) ||
        !contains(rw.seq(new_premises[1]), negate(xi)))
      inapplicable("commuted inner cut loses its cut pair");
    Sequent c = seq_union(seq_minus(rw.seq(new_premises[0]), xi),
                          seq_minus(rw.seq(new_premises[1]), negate(xi)));
    if (!sequent_equal(c, cv.conclusion)) {
      if (!is_subset(c, cv.conclusion))
        inapplicable("commuted inner cut does not reach the conclusion");
      std::string cut_id = rw.mk(std::move(c), std::move(out));
      rw.move_into(cv.node, rw.weaken_to(cut_id, cv.conclusion));
      return;
    }
    rw.out.nodes[cv.node] = ProofNode{cv.conclusion, std::move(out)};
    return;
  }
  if (!app.principal && app.rule != RuleId::K) app.principal = rw.principal_of(src_node);
  // Rules whose schema premise must drop the principal exactly (weakening and
  // the vacuous-diamond rules) cannot absorb a context widened by the
  // commuted cut. They only discard formulas, so when the narrow premise does
  // not fit, plain weakening already reaches the conclusion.
  if (app.rule == RuleId::W || app.rule == RuleId::DiaEmpty ||
      app.rule == RuleId::DiaO) {
    bool fits = app.principal && contains(cv.conclusion, *app.principal);
    Sequent narrow;
    if (fits) {
      auto prem = schema_premises(cv.conclusion, app, rw.reg);
      fits = prem.has_value() && !prem->empty();
      if (fits) narrow = (*prem)[0];
    }
    bool strict =
        app.rule != RuleId::DiaO ||
        (fits &&
         sequent_equal(narrow, seq_minus(cv.conclusion, *app.principal)));
    if (strict && (!fits || !is_subset(rw.seq(new_premises[0]), narrow))) {
      rw.move_into(cv.node, rw.weaken_to(new_premises[0], cv.conclusion));
      return;
    }
  }
  RuleApp out = app;
  out.premises.clear();
  for (std::size_t i = 0; i < new_premises.size(); ++i)
    out.premises.push_back(repair_to_schema(rw, new_premises[i], cv.conclusion, app, i));
  rw.out.nodes[cv.node] = ProofNode{cv.conclusion, std::move(out)};
}

void commute(Rewriter& rw, const CutView& cv, bool left) {
  const std::string& through = left ? cv.l : cv.r;
  const std::string& other = left ? cv.r : cv.l;
  const FormulaPtr& phi = left ? cv.chi : cv.nchi;
  const RuleApp& app = rw.rule(through);
  if (app.rule == RuleId::K || app.rule == RuleId::Loop || app.rule == RuleId::Open ||
      app.premises.empty())
    inapplicable("rule cannot be commuted past");
  bool found = false;
  std::vector<std::string> new_premises;
  bool first_use = true;
  for (const auto& p : app.premises) {
    if (contains(rw.seq(p), phi)) {
      found = true;
      std::string dual = first_use ? other : rw.copy_subtree(other);
      first_use = false;
      new_premises.push_back(left ? rw.mk_cut(p, dual, phi)
                                  : rw.mk_cut(dual, p, negate(phi)));
    } else {
      new_premises.push_back(p);
    }
  }
  if (!found) inapplicable("cut formula absent from every premise");
  rebuild_rule_at(rw, cv, through, new_premises);
}

// Applies `choice` at the cut; the reduct replaces node cv.node.
void apply_choice(Rewriter& rw, const CutView& cv, StepChoice choice) {
  auto finish = [&](const std::string& proof) {
    rw.move_into(cv.node, rw.weaken_to(proof, cv.conclusion));
  };
  switch (choice) {
    case StepChoice::WeakLeft:
      if (!principal_matches(rw, cv.l, RuleId::W, cv.chi)) inapplicable("weak-left");
      return finish(premise_of(rw, cv.l, 0));
    case StepChoice::WeakRight:
      if (!principal_matches(rw, cv.r, RuleId::W, cv.nchi)) inapplicable("weak-right");
      return finish(premise_of(rw, cv.r, 0));
    case StepChoice::AxLeft:
      if (rw.rule(cv.l).rule != RuleId::Ax) inapplicable("ax-left");
      return finish(cv.r);
    case StepChoice::AxRight:
      if (rw.rule(cv.r).rule != RuleId::Ax) inapplicable("ax-right");
      return finish(cv.l);
    case StepChoice::EmptyKey: {
      if (principal_matches(rw, cv.l, RuleId::DiaEmpty, cv.chi))
        return finish(premise_of(rw, cv.l, 0));
      if (principal_matches(rw, cv.r, RuleId::DiaEmpty, cv.nchi))
        return finish(premise_of(rw, cv.r, 0));
      inapplicable("empty-key");
    }
    case StepChoice::EpsKey: {
      auto sides = key_sides(rw, cv, RuleId::BoxEps, RuleId::DiaEps);
      if (!sides) inapplicable("eps-key");
      return finish(rw.mk_cut(premise_of(rw, sides->box_id, 0),
                              premise_of(rw, sides->dia_id, 0),
                              sides->box_formula->left));
    }
    case StepChoice::TestKey: {
      auto sides = key_sides(rw, cv, RuleId::BoxTest, RuleId::DiaTest);
      if (!sides) inapplicable("test-key");
      const FormulaPtr& b = sides->box_formula;
      FormulaPtr active = f_or(negate(b->prog->test), b->left);
      std::string box_p = premise_of(rw, sides->box_id, 0);
      std::string dia_p = premise_of(rw, sides->dia_id, 0);
      return finish(rw.mk_cut(box_p, dia_p, active));
    }
    case StepChoice::SeqKey: {
      auto sides = key_sides(rw, cv, RuleId::BoxSeq, RuleId::DiaSeq);
      if (!sides) inapplicable("seq-key");
      const FormulaPtr& b = sides->box_formula;
      FormulaPtr active = f_box(b->prog->left, f_box(b->prog->right, b->left));
      return finish(rw.mk_cut(premise_of(rw, sides->box_id, 0),
                              premise_of(rw, sides->dia_id, 0), active));
    }
    case StepChoice::KKey: {
      const RuleApp& la = rw.rule(cv.l);
      const RuleApp& ra = rw.rule(cv.r);
      if (la.rule != RuleId::K || ra.rule != RuleId::K || !la.k_prog ||
          !ra.k_prog || !equal(*la.k_prog, *ra.k_prog))
        inapplicable("k-key");
      // The cut pair is (box on one side, dual diamond on the other); the box
      // is that side's K principal, the diamond one of the other's side set.
      std::string box_id, dia_id;
      FormulaPtr box_f;
      if (cv.chi->kind == FKind::Box && equal(cv.chi->prog, *la.k_prog)) {
        box_id = cv.l; dia_id = cv.r; box_f = cv.chi;
      } else if (cv.nchi->kind == FKind::Box && equal(cv.nchi->prog, *ra.k_prog)) {
        box_id = cv.r; dia_id = cv.l; box_f = cv.nchi;
      } else {
        inapplicable("k-key cut formula is not the modality");
      }
      std::string inner = rw.mk_cut(premise_of(rw, box_id, 0),
                                    premise_of(rw, dia_id, 0), box_f->left);
      return rebuild_rule_at(rw, cv, dia_id, {inner});
    }
    case StepChoice::AndOrKey: {
      // The conjunction side plays the box role here.
      std::string and_id, or_id;
      FormulaPtr conj;
      if (cv.chi->kind == FKind::And &&
          principal_matches(rw, cv.l, RuleId::And, cv.chi) &&
          principal_matches(rw, cv.r, RuleId::Or, cv.nchi)) {
        and_id = cv.l; or_id = cv.r; conj = cv.chi;
      } else if (cv.nchi->kind == FKind::And &&
                 principal_matches(rw, cv.r, RuleId::And, cv.nchi) &&
                 principal_matches(rw, cv.l, RuleId::Or, cv.chi)) {
        and_id = cv.r; or_id = cv.l; conj = cv.nchi;
      } else {
        inapplicable("and-or-key");
      }
      std::string inner = rw.mk_cut(premise_of(rw, and_id, 1),
                                    premise_of(rw, or_id, 0), conj->right);
      std::string outer = rw.mk_cut(premise_of(rw, and_id, 0), inner, conj->left);
      return finish(outer);
    }
    case StepChoice::ChoiceKey: {
      auto sides = key_sides(rw, cv, RuleId::BoxChoice, RuleId::DiaChoice);
      if (!sides) inapplicable("choice-key");
      const FormulaPtr& b = sides->box_formula;
      std::string inner = rw.mk_cut(premise_of(rw, sides->box_id, 1),
                                    premise_of(rw, sides->dia_id, 0),
                                    f_box(b->prog->right, b->left));
      std::string outer = rw.mk_cut(premise_of(rw, sides->box_id, 0), inner,
                                    f_box(b->prog->left, b->left));
      return finish(outer);
    }
    case StepChoice::StarKey: {
      auto sides = key_sides(rw, cv, RuleId::BoxStar, RuleId::DiaStar);
      if (!sides) inapplicable("star-key");
      const FormulaPtr& b = sides->box_formula;
      FormulaPtr step_box = f_box(p_seq(b->prog->left, b->prog), b->left);
      std::string inner = rw.mk_cut(premise_of(rw, sides->box_id, 1),
                                    premise_of(rw, sides->dia_id, 0), step_box);
      std::string outer = rw.mk_cut(premise_of(rw, sides->box_id, 0), inner, b->left);
      return finish(outer);
    }
    case StepChoice::OKey: {
      auto sides = key_sides(rw, cv, RuleId::BoxO, RuleId::DiaO);
      if (!sides) inapplicable("O-key");
      const FormulaPtr& b = sides->box_formula;
      auto steps = op_step(b->prog, rw.reg);
      const auto& box_premises = rw.rule(sides->box_id).premises;
      if (box_premises.size() != steps.size()) inapplicable("O-key premise count");
      std::string acc = premise_of(rw, sides->dia_id, 0);
      for (std::size_t i = 0; i < steps.size(); ++i) {
        FormulaPtr cut_box =
            f_box(steps[i].first, f_box(steps[i].second, b->left));
        acc = rw.mk_cut(box_premises[i], acc, cut_box);
      }
      return finish(acc);
    }
    case StepChoice::CommuteLeftUnary:
      if (rw.rule(cv.l).premises.size() != 1) inapplicable("commute-left-unary");
      return commute(rw, cv, true);
    case StepChoice::CommuteLeftBinary:
      if (rw.rule(cv.l).premises.size() < 2) inapplicable("commute-left-binary");
      return commute(rw, cv, true);
    case StepChoice::CommuteRightUnary:
      if (rw.rule(cv.r).premises.size() != 1) inapplicable("commute-right-unary");
      return commute(rw, cv, false);
    case StepChoice::CommuteRightBinary:
      if (rw.rule(cv.r).premises.size() < 2) inapplicable("commute-right-binary");
      return commute(rw, cv, false);
  }
  inapplicable("unknown step");
}

std::vector<std::string> cuts_in_order(const Derivation& d, bool bottom_most_only) {
  // Depth-first preorder; bottom-most cuts are the ones without a cut ancestor.
  std::vector<std::string> bottom, upper;
  struct Item { std::string id; bool under_cut; };
  std::vector<Item> stack{{d.root, false}};
  while (!stack.empty()) {
    auto [id, under] = stack.back();
    stack.pop_back();
    const ProofNode& n = d.nodes.at(id);
    bool is_cut = n.rule.rule == RuleId::Cut;
    if (is_cut) (under ? upper : bottom).push_back(id);
    for (auto it = n.rule.premises.rbegin(); it != n.rule.premises.rend(); ++it)
      stack.push_back({*it, under || is_cut});
  }
  if (!bottom_most_only)
    bottom.insert(bottom.end(), upper.begin(), upper.end());
  return bottom;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<StepChoice>>> cut_redexes(
    const Derivation& d, const OpSemRegistry& reg) {
  std::vector<std::pair<std::string, std::vector<StepChoice>>> out;
  for (const auto& id : cuts_in_order(d, false)) {
    std::vector<StepChoice> applicable;
    for (StepChoice c : step_order()) {
      try {
        Rewriter rw{d, reg, 0};
        apply_choice(rw, view_cut(rw.out, id), c);
        applicable.push_back(c);
      } catch (const std::invalid_argument&) {
      }
    }
    out.push_back({id, std::move(applicable)});
  }
  return out;
}

Derivation apply_step(const Derivation& d, const std::string& node,
                      StepChoice choice, const OpSemRegistry& reg) {
  Rewriter rw{d, reg, 0};
  apply_choice(rw, view_cut(rw.out, node), choice);
  rw.gc();
  return std::move(rw.out);
}

namespace {

// Keeps node ids (so back-edges inside the retained prefix stay valid).
void cf_copy(const Derivation& src, const std::string& id, Derivation& dst) {
  const ProofNode& node = src.nodes.at(id);
  if (node.rule.rule == RuleId::Cut) {
    RuleApp open;
    open.rule = RuleId::Open;
    dst.nodes[id] = ProofNode{node.sequent, std::move(open)};
    return;
  }
  dst.nodes[id] = node;
  for (const auto& p : node.rule.premises) cf_copy(src, p, dst);
}

}  // namespace

Derivation cf_prefix(const Derivation& d) {
  Derivation out;
  out.root = d.root;
  cf_copy(d, d.root, out);
  return out;
}

EliminateResult eliminate(const Derivation& d, std::size_t unfold_depth,
                          std::size_t fuel, const OpSemRegistry& reg) {
  for (const auto& [id, node] : d.nodes) {
    if (node.rule.rule == RuleId::K && node.rule.k_prog) {
      ProgKind k = (*node.rule.k_prog)->kind;
      if (k != ProgKind::Inst && k != ProgKind::Terminated && k != ProgKind::Test)
        throw std::invalid_argument(
            "eliminate requires one-step modality programs in K at node " + id +
            "; expand compound modalities with the derived rules first");
    }
  }
  // Any cut in the subproofs above `id`?
  auto has_cut_above = [](const Derivation& dd, const std::string& id) {
    std::vector<std::string> stack = dd.nodes.at(id).rule.premises;
    while (!stack.empty()) {
      std::string top = std::move(stack.back());
      stack.pop_back();
      const ProofNode& n = dd.nodes.at(top);
      if (n.rule.rule == RuleId::Cut) return true;
      for (const auto& p : n.rule.premises) stack.push_back(p);
    }
    return false;
  };
  EliminateResult res;
  Derivation cur = unfold(d, unfold_depth);
  res.trace.sigmas.push_back(cur);
  while (true) {
    std::vector<std::string> cuts = cuts_in_order(cur, false);
    if (cuts.empty()) break;
    // Reduce topmost cuts (cut-free subproofs) first: commuting a cut past
    // another cut duplicates it and need never terminate, while a cut with
    // cut-free premises only ever spawns smaller cuts.
    std::stable_partition(
        cuts.begin(), cuts.end(),
        [&](const std::string& id) { return !has_cut_above(cur, id); });
    if (fuel == 0) {
      res.fuel_exhausted = true;
      break;
    }
    --fuel;
    bool stepped = false;
    for (const auto& id : cuts) {
      for (StepChoice c : step_order()) {
        try {
          Derivation next = apply_step(cur, id, c, reg);
          res.trace.log.push_back({id, c});
          cur = std::move(next);
          res.trace.sigmas.push_back(cur);
          stepped = true;
          break;
        } catch (const std::invalid_argument&) {
        }
      }
      if (stepped) break;
    }
    if (!stepped) break;  // no reducible cut: return the best prefix
  }
  res.cut_free = cf_prefix(cur);
  return res;
}

}  // namespace opdl
