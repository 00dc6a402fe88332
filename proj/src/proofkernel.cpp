#include "opdl/proofkernel.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

namespace opdl {

namespace {

const std::pair<RuleId, const char*> kRuleNames[] = {
    {RuleId::Top, "top"},           {RuleId::Ax, "ax"},
    {RuleId::W, "w"},               {RuleId::Or, "or"},
    {RuleId::And, "and"},           {RuleId::K, "k"},
    {RuleId::Cut, "cut"},           {RuleId::BoxEps, "box_eps"},
    {RuleId::BoxEmpty, "box_empty"},{RuleId::BoxTest, "box_test"},
    {RuleId::BoxChoice, "box_choice"}, {RuleId::BoxSeq, "box_seq"},
    {RuleId::BoxStar, "box_star"},  {RuleId::DiaEps, "dia_eps"},
    {RuleId::DiaEmpty, "dia_empty"},{RuleId::DiaTest, "dia_test"},
    {RuleId::DiaChoice, "dia_choice"}, {RuleId::DiaSeq, "dia_seq"},
    {RuleId::DiaStar, "dia_star"},  {RuleId::BoxO, "box_O"},
    {RuleId::DiaO, "dia_O"},        {RuleId::Loop, "loop"},
    {RuleId::Open, "open"},
};

}  // namespace

std::string rule_name(RuleId id) {
  for (auto& [r, n] : kRuleNames)
    if (r == id) return n;
  return "?";
}

std::optional<RuleId> rule_from_name(const std::string& name) {
  for (auto& [r, n] : kRuleNames)
    if (name == n) return r;
  return std::nullopt;
}

namespace {

bool is_sf_box(const FormulaPtr& f) {
  return f->kind == FKind::Box && (f->prog->kind == ProgKind::Star ||
                                   f->prog->kind == ProgKind::Foreign);
}

// Per-premise active formulas of a structural rule with principal `rho`.
// Empty optional when the rule has no context-extension shape.
std::optional<std::vector<Sequent>> rule_actives(RuleId rule, const FormulaPtr& rho) {
  auto box = [&](FKind want) { return rho->kind == want; };
  auto fail = std::optional<std::vector<Sequent>>{};
  switch (rule) {
    case RuleId::W:
      return std::vector<Sequent>{{}};
    case RuleId::Or:
      if (rho->kind != FKind::Or) return fail;
      return std::vector<Sequent>{{rho->left, rho->right}};
    case RuleId::And:
      if (rho->kind != FKind::And) return fail;
      return std::vector<Sequent>{{rho->left}, {rho->right}};
    case RuleId::BoxEps:
      if (!box(FKind::Box) || rho->prog->kind != ProgKind::Terminated) return fail;
      return std::vector<Sequent>{{rho->left}};
    case RuleId::DiaEps:
      if (!box(FKind::Dia) || rho->prog->kind != ProgKind::Terminated) return fail;
      return std::vector<Sequent>{{rho->left}};
    case RuleId::BoxTest:
      if (!box(FKind::Box) || rho->prog->kind != ProgKind::Test) return fail;
      return std::vector<Sequent>{{f_or(negate(rho->prog->test), rho->left)}};
    case RuleId::DiaTest:
      if (!box(FKind::Dia) || rho->prog->kind != ProgKind::Test) return fail;
      return std::vector<Sequent>{{f_and(rho->prog->test, rho->left)}};
    case RuleId::BoxChoice:
      if (!box(FKind::Box) || rho->prog->kind != ProgKind::Choice) return fail;
      return std::vector<Sequent>{{f_box(rho->prog->left, rho->left)},
                                  {f_box(rho->prog->right, rho->left)}};
    case RuleId::DiaChoice:
      if (!box(FKind::Dia) || rho->prog->kind != ProgKind::Choice) return fail;
      return std::vector<Sequent>{
          {f_dia(rho->prog->left, rho->left), f_dia(rho->prog->right, rho->left)}};
    case RuleId::BoxSeq:
      if (!box(FKind::Box) || rho->prog->kind != ProgKind::Seq) return fail;
      return std::vector<Sequent>{
          {f_box(rho->prog->left, f_box(rho->prog->right, rho->left))}};
    case RuleId::DiaSeq:
      if (!box(FKind::Dia) || rho->prog->kind != ProgKind::Seq) return fail;
      return std::vector<Sequent>{
          {f_dia(rho->prog->left, f_dia(rho->prog->right, rho->left))}};
    case RuleId::BoxStar:
      if (!box(FKind::Box) || rho->prog->kind != ProgKind::Star) return fail;
      return std::vector<Sequent>{
          {rho->left}, {f_box(p_seq(rho->prog->left, rho->prog), rho->left)}};
    case RuleId::DiaStar:
      if (!box(FKind::Dia) || rho->prog->kind != ProgKind::Star) return fail;
      return std::vector<Sequent>{
          {rho->left, f_dia(p_seq(rho->prog->left, rho->prog), rho->left)}};
    default:
      return fail;
  }
}

// Actives of the operational rules: one entry per transition of the program.
std::vector<FormulaPtr> op_actives(const FormulaPtr& rho, const OpSemRegistry& reg) {
  std::vector<FormulaPtr> out;
  const bool boxed = rho->kind == FKind::Box;
  for (auto& [label, next] : op_step(rho->prog, reg)) {
    out.push_back(boxed ? f_box(label, f_box(next, rho->left))
                        : f_dia(label, f_dia(next, rho->left)));
  }
  return out;
}

struct LocalChecker {
  const Derivation& d;
  const OpSemRegistry& reg;
  const CheckOptions& opts;
  std::optional<RuleViolation> violation;

  bool fail(const std::string& node, const std::string& reason) {
    if (!violation) violation = RuleViolation{node, reason};
    return false;
  }

  const ProofNode* get(const std::string& id) {
    auto it = d.nodes.find(id);
    return it == d.nodes.end() ? nullptr : &it->second;
  }

  // premise == (C \ rho) + actives  or  premise == C + actives.
  bool context_match(const Sequent& conclusion, const FormulaPtr& rho,
                     const Sequent& actives, const Sequent& premise) {
    Sequent narrow = seq_union(seq_minus(conclusion, rho), actives);
    if (sequent_equal(premise, narrow)) return true;
    Sequent wide = seq_union(conclusion, actives);
    return sequent_equal(premise, wide);
  }

  bool check_node(const std::string& id, const ProofNode& node) {
    const Sequent& C = node.sequent;
    const RuleApp& r = node.rule;
    std::vector<const Sequent*> prem;
    for (const auto& pid : r.premises) {
      const ProofNode* p = get(pid);
      if (!p) return fail(id, "dangling premise reference: " + pid);
      prem.push_back(&p->sequent);
    }
    auto need_premises = [&](std::size_t k) {
      if (prem.size() != k)
        return fail(id, rule_name(r.rule) + ": expected " + std::to_string(k) +
                            " premises, got " + std::to_string(prem.size()));
      return true;
    };
    switch (r.rule) {
      case RuleId::Open:
        if (!opts.allow_open) return fail(id, "open premise in a closed proof");
        return need_premises(0);
      case RuleId::Loop:
        if (!r.loop_target) return fail(id, "loop without a target");
        return need_premises(0);
      case RuleId::Top:
        if (!need_premises(0)) return false;
        if (C.size() != 1 || (*C.begin())->kind != FKind::Top)
          return fail(id, "top: conclusion must be exactly {true}");
        return true;
      case RuleId::Ax: {
        if (!need_premises(0)) return false;
        if (C.size() != 2) return fail(id, "ax: conclusion must be a dual pair");
        auto it = C.begin();
        FormulaPtr a = *it++;
        FormulaPtr b = *it;
        if (!equal(b, negate(a))) return fail(id, "ax: formulas are not dual");
        return true;
      }
      case RuleId::BoxEmpty: {
        if (!need_premises(0)) return false;
        if (C.size() != 1) return fail(id, "box_empty: conclusion must be exactly {[abort]f}");
        FormulaPtr f = *C.begin();
        if (f->kind != FKind::Box || f->prog->kind != ProgKind::Stuck)
          return fail(id, "box_empty: principal must be a box over abort");
        return true;
      }
      case RuleId::DiaEmpty: {
        if (!need_premises(1)) return false;
        FormulaPtr rho = r.principal ? *r.principal : nullptr;
        if (!rho) {
          for (const auto& f : C)
            if (f->kind == FKind::Dia && f->prog->kind == ProgKind::Stuck &&
                sequent_equal(*prem[0], seq_minus(C, f)))
              rho = f;
        }
        if (!rho || !contains(C, rho) || rho->kind != FKind::Dia ||
            rho->prog->kind != ProgKind::Stuck)
          return fail(id, "dia_empty: principal must be a diamond over abort in the conclusion");
        if (!sequent_equal(*prem[0], seq_minus(C, rho)))
          return fail(id, "dia_empty: premise must drop exactly the principal");
        if (prem[0]->empty())
          return fail(id, "dia_empty: remaining context must be nonempty");
        return true;
      }
      case RuleId::W: {
        if (!need_premises(1)) return false;
        FormulaPtr rho = r.principal ? *r.principal : nullptr;
        if (!rho) {
          for (const auto& f : C)
            if (sequent_equal(*prem[0], seq_minus(C, f))) rho = f;
        }
        if (!rho || !contains(C, rho))
          return fail(id, "w: principal must occur in the conclusion");
        if (!sequent_equal(*prem[0], seq_minus(C, rho)))
          return fail(id, "w: premise must drop exactly the principal");
        return true;
      }
      case RuleId::K: {
        if (!need_premises(1)) return false;
        if (!r.k_prog) return fail(id, "k: missing modality program");
        ProgramPtr alpha = *r.k_prog;
        if (alpha->kind == ProgKind::Stuck)
          return fail(id, "k: the program must differ from abort");
        if (opts.atomic_k && alpha->kind != ProgKind::Inst &&
            alpha->kind != ProgKind::Terminated && alpha->kind != ProgKind::Test)
          return fail(id, "k: compound programs are disabled in atomic mode");
        FormulaPtr boxf;
        Sequent gamma;
        for (const auto& f : C) {
          if (f->kind == FKind::Box && equal(f->prog, alpha)) {
            if (boxf) return fail(id, "k: more than one box over the program");
            boxf = f;
          } else if (f->kind == FKind::Dia && equal(f->prog, alpha)) {
            gamma.insert(f->left);
          } else {
            return fail(id, "k: conclusion formula outside the <a>Gamma,[a]f shape");
          }
        }
        if (!boxf) return fail(id, "k: no box over the program");
        Sequent want = seq_plus(gamma, boxf->left);
        if (!sequent_equal(*prem[0], want))
          return fail(id, "k: premise must be Gamma together with the box body");
        return true;
      }
      case RuleId::Cut: {
        if (!need_premises(2)) return false;
        if (!r.cut_formula) return fail(id, "cut: missing cut formula");
        FormulaPtr chi = *r.cut_formula;
        FormulaPtr nchi = negate(chi);
        if (!contains(*prem[0], chi))
          return fail(id, "cut: first premise lacks the cut formula");
        if (!contains(*prem[1], nchi))
          return fail(id, "cut: second premise lacks the dual cut formula");
        Sequent want = seq_union(seq_minus(*prem[0], chi), seq_minus(*prem[1], nchi));
        if (!sequent_equal(C, want))
          return fail(id, "cut: conclusion must combine the premises minus the cut pair");
        return true;
      }
      case RuleId::BoxO:
      case RuleId::DiaO: {
        FormulaPtr rho = r.principal ? *r.principal : nullptr;
        FKind want = r.rule == RuleId::BoxO ? FKind::Box : FKind::Dia;
        if (!rho) {
          for (const auto& f : C)
            if (f->kind == want && f->prog->kind == ProgKind::Foreign) rho = f;
        }
        if (!rho || !contains(C, rho) || rho->kind != want)
          return fail(id, rule_name(r.rule) + ": principal must be a modality in the conclusion");
        if (rho->prog->kind == ProgKind::Terminated)
          return fail(id, rule_name(r.rule) + ": the terminated program is excluded");
        std::vector<FormulaPtr> actives = op_actives(rho, reg);
        if (r.rule == RuleId::BoxO) {
          if (!need_premises(actives.size())) return false;
          for (std::size_t i = 0; i < actives.size(); ++i)
            if (!context_match(C, rho, Sequent{actives[i]}, *prem[i]))
              return fail(id, "box_O: premise " + std::to_string(i) +
                                  " does not match the transition set");
          return true;
        }
        if (!need_premises(1)) return false;
        if (actives.empty()) {
          Sequent rest = seq_minus(C, rho);
          if (rest.empty())
            return fail(id, "dia_O: remaining context must be nonempty when the program is stuck");
          if (!sequent_equal(*prem[0], rest))
            return fail(id, "dia_O: premise must drop exactly the principal");
          return true;
        }
        Sequent act(actives.begin(), actives.end());
        if (!context_match(C, rho, act, *prem[0]))
          return fail(id, "dia_O: premise must list one diamond per transition");
        return true;
      }
      default: {
        // Context-extension rules driven by rule_actives.
        FormulaPtr rho = r.principal ? *r.principal : nullptr;
        std::vector<FormulaPtr> candidates;
        if (rho)
          candidates.push_back(rho);
        else
          candidates.assign(C.begin(), C.end());
        for (const auto& cand : candidates) {
          if (!contains(C, cand)) continue;
          auto actives = rule_actives(r.rule, cand);
          if (!actives) continue;
          if (prem.size() != actives->size()) continue;
          bool ok = true;
          for (std::size_t i = 0; i < prem.size(); ++i)
            if (!context_match(C, cand, (*actives)[i], *prem[i])) ok = false;
          if (ok) return true;
        }
        return fail(id, rule_name(r.rule) + ": no principal matches the rule schema");
      }
    }
  }
};

struct StructureInfo {
  std::map<std::string, std::string> parent;  // tree parent of each node
  std::vector<std::string> order;             // depth-first from the root
};

std::optional<RuleViolation> check_structure(const Derivation& d,
                                             StructureInfo& info) {
  if (!d.nodes.count(d.root))
    return RuleViolation{d.root, "missing root node"};
  std::set<std::string> visited;
  // Iterative DFS carrying the ancestor path for back-edge validation.
  struct Item { std::string id; std::vector<std::string> path; };
  std::vector<Item> stack{{d.root, {}}};
  while (!stack.empty()) {
    auto [id, path] = std::move(stack.back());
    stack.pop_back();
    auto it = d.nodes.find(id);
    if (it == d.nodes.end()) return RuleViolation{id, "dangling node reference"};
    if (!visited.insert(id).second)
      return RuleViolation{id, "node used as premise more than once"};
    info.order.push_back(id);
    const ProofNode& node = it->second;
    if (node.rule.rule == RuleId::Loop) {
      const std::string& target = *node.rule.loop_target;
      if (std::find(path.begin(), path.end(), target) == path.end())
        return RuleViolation{id, "back-edge target is not a strict ancestor: " + target};
      if (!sequent_equal(node.sequent, d.nodes.at(target).sequent))
        return RuleViolation{id, "back-edge sequent differs from its target"};
    }
    auto child_path = path;
    child_path.push_back(id);
    for (auto rit = node.rule.premises.rbegin(); rit != node.rule.premises.rend(); ++rit) {
      info.parent[*rit] = id;
      stack.push_back({*rit, child_path});
    }
  }
  for (const auto& [id, _] : d.nodes)
    if (!visited.count(id))
      return RuleViolation{id, "node unreachable from the root"};
  return std::nullopt;
}

}  // namespace

std::optional<RuleViolation> check_local(const Derivation& d,
                                         const OpSemRegistry& reg,
                                         const CheckOptions& opts) {
  StructureInfo info;
  if (auto v = check_structure(d, info)) return v;
  LocalChecker checker{d, reg, opts, std::nullopt};
  for (const auto& id : info.order) {
    if (!checker.check_node(id, d.nodes.at(id)) && checker.violation)
      return checker.violation;
  }
  return std::nullopt;
}

std::vector<OccRef> immediate_ancestors(const Derivation& d, const OccRef& occ,
                                        const OpSemRegistry& reg) {
  const ProofNode& node = d.nodes.at(occ.node);
  const RuleApp& r = node.rule;
  if (!contains(node.sequent, occ.formula))
    throw std::invalid_argument("occurrence not present in the node sequent");
  std::vector<OccRef> out;
  if (r.rule == RuleId::Loop) {
    out.push_back({*r.loop_target, occ.formula});
    return out;
  }
  if (r.rule == RuleId::Open || r.premises.empty()) return out;

  auto premise_seq = [&](std::size_t i) -> const Sequent& {
    return d.nodes.at(r.premises[i]).sequent;
  };
  auto side_formula = [&]() {
    for (std::size_t i = 0; i < r.premises.size(); ++i)
      if (contains(premise_seq(i), occ.formula))
        out.push_back({r.premises[i], occ.formula});
  };

  if (r.rule == RuleId::K) {
    ProgramPtr alpha = *r.k_prog;
    if (occ.formula->kind == FKind::Box && equal(occ.formula->prog, alpha)) {
      out.push_back({r.premises[0], occ.formula->left});
    } else if (occ.formula->kind == FKind::Dia && equal(occ.formula->prog, alpha)) {
      out.push_back({r.premises[0], occ.formula->left});
    }
    return out;
  }
  if (r.rule == RuleId::Cut) {
    side_formula();
    return out;
  }

  FormulaPtr rho = r.principal ? *r.principal : nullptr;
  if (!rho) {
    // Reconstruct the principal the same way the checker accepts it.
    if (r.rule == RuleId::BoxO || r.rule == RuleId::DiaO) {
      FKind want = r.rule == RuleId::BoxO ? FKind::Box : FKind::Dia;
      for (const auto& f : node.sequent)
        if (f->kind == want && f->prog->kind == ProgKind::Foreign) rho = f;
    } else {
      for (const auto& f : node.sequent) {
        auto actives = rule_actives(r.rule, f);
        if (!actives || actives->size() != r.premises.size()) continue;
        rho = f;
        break;
      }
    }
  }
  if (rho && equal(occ.formula, rho)) {
    if (r.rule == RuleId::W || r.rule == RuleId::DiaEmpty) return out;
    if (r.rule == RuleId::BoxO || r.rule == RuleId::DiaO) {
      std::vector<FormulaPtr> actives = op_actives(rho, reg);
      if (r.rule == RuleId::BoxO) {
        for (std::size_t i = 0; i < actives.size() && i < r.premises.size(); ++i)
          out.push_back({r.premises[i], actives[i]});
      } else {
        for (const auto& a : actives) out.push_back({r.premises[0], a});
      }
      return out;
    }
    if (auto actives = rule_actives(r.rule, rho)) {
      for (std::size_t i = 0; i < actives->size() && i < r.premises.size(); ++i)
        for (const auto& a : (*actives)[i]) out.push_back({r.premises[i], a});
      return out;
    }
  }
  side_formula();
  return out;
}

namespace {

// ---- Progress checking via composition closure -----------------------------
//
// Occurrences are indexed per node; an edge relation holds triples
// (src occurrence, dst occurrence, flags) where bit 0 records an unfolding
// step (a K step whose box principal is the source occurrence, or a box-star
// or operational-box rule whose principal it is) and bit 1 records that the
// thread touches a star/foreign box. The progressing condition holds iff every
// idempotent composite relation over a cycle contains a diagonal element
// carrying both bits (the size-change/Ramsey criterion).

struct OccIndex {
  std::map<std::string, std::vector<FormulaPtr>> formulas;
  int index_of(const Derivation& d, const std::string& node, const FormulaPtr& f) {
    auto& v = at(d, node);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (equal(v[i], f)) return static_cast<int>(i);
    return -1;
  }
  const std::vector<FormulaPtr>& at(const Derivation& d, const std::string& node) {
    auto it = formulas.find(node);
    if (it != formulas.end()) return it->second;
    auto& v = formulas[node];
    const Sequent& s = d.nodes.at(node).sequent;
    v.assign(s.begin(), s.end());
    return v;
  }
};

using RelElem = std::tuple<int, int, int>;  // (src occ, dst occ, flags)
using Rel = std::set<RelElem>;

Rel compose(const Rel& a, const Rel& b) {
  Rel out;
  for (const auto& [i, j, f1] : a)
    for (const auto& [j2, k, f2] : b)
      if (j == j2) out.insert({i, k, f1 | f2});
  return out;
}

bool has_progress_diagonal(const Rel& r) {
  for (const auto& [i, j, f] : r)
    if (i == j && (f & 3) == 3) return true;
  return false;
}

struct EdgeRel {
  std::string from, to;
  Rel rel;
};

struct ProgressGraph {
  std::vector<EdgeRel> edges;                       // base edges
  std::map<std::string, std::vector<std::size_t>> out;  // edges by source
};

ProgressGraph build_progress_graph(const Derivation& d, const OpSemRegistry& reg,
                                   OccIndex& occ) {
  ProgressGraph g;
  for (const auto& [id, node] : d.nodes) {
    std::vector<std::string> targets;
    if (node.rule.rule == RuleId::Loop)
      targets.push_back(*node.rule.loop_target);
    else
      targets = node.rule.premises;
    const auto& src_occ = occ.at(d, id);
    for (const auto& target : targets) {
      EdgeRel e{id, target, {}};
      for (std::size_t i = 0; i < src_occ.size(); ++i) {
        OccRef o{id, src_occ[i]};
        bool k_box = node.rule.rule == RuleId::K &&
                     src_occ[i]->kind == FKind::Box &&
                     equal(src_occ[i]->prog, *node.rule.k_prog);
        bool unfold_box = (node.rule.rule == RuleId::BoxStar ||
                           node.rule.rule == RuleId::BoxO) &&
                          node.rule.principal &&
                          equal(src_occ[i], *node.rule.principal);
        for (const auto& anc : immediate_ancestors(d, o, reg)) {
          if (anc.node != target) continue;
          int j = occ.index_of(d, target, anc.formula);
          if (j < 0) continue;
          int flags = 0;
          if (k_box || unfold_box) flags |= 1;
          if (is_sf_box(src_occ[i]) || is_sf_box(anc.formula)) flags |= 2;
          e.rel.insert({static_cast<int>(i), j, flags});
        }
      }
      g.out[id].push_back(g.edges.size());
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

struct ClosureElem {
  std::string from, to;
  Rel rel;
  int parent;     // closure element composed with...
  int last_edge;  // ...this base edge (-1: the element is a base edge)
};

// Reconstructs the node path of a closure element (from .. to inclusive).
std::vector<std::string> closure_path(const std::vector<ClosureElem>& closure,
                                      int idx) {
  std::vector<std::string> nodes;
  int cur = idx;
  std::vector<int> chain;
  while (cur >= 0) {
    chain.push_back(cur);
    cur = closure[cur].parent;
  }
  std::reverse(chain.begin(), chain.end());
  nodes.push_back(closure[chain.front()].from);
  for (int c : chain) nodes.push_back(closure[c].to);
  return nodes;
}

}  // namespace

ProgressResult check_progress(const Derivation& d, const OpSemRegistry& reg) {
  OccIndex occ;
  ProgressGraph g = build_progress_graph(d, reg, occ);

  std::vector<ClosureElem> closure;
  std::set<std::tuple<std::string, std::string, Rel>> seen;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& edge = g.edges[e];
    if (seen.insert({edge.from, edge.to, edge.rel}).second)
      closure.push_back({edge.from, edge.to, edge.rel, -1, static_cast<int>(e)});
  }
  for (std::size_t i = 0; i < closure.size(); ++i) {
    auto it = g.out.find(closure[i].to);
    if (it == g.out.end()) continue;
    for (std::size_t e : it->second) {
      const auto& edge = g.edges[e];
      Rel composed = compose(closure[i].rel, edge.rel);
      if (seen.insert({closure[i].from, edge.to, composed}).second)
        closure.push_back({closure[i].from, edge.to, std::move(composed),
                           static_cast<int>(i), static_cast<int>(e)});
    }
  }

  for (std::size_t i = 0; i < closure.size(); ++i) {
    const auto& c = closure[i];
    if (c.from != c.to) continue;
    if (compose(c.rel, c.rel) != c.rel) continue;  // only idempotents matter
    if (has_progress_diagonal(c.rel)) continue;
    // Offending cycle: build the lasso (root path to c.from, then the cycle).
    Lasso lasso;
    std::vector<std::string> cyc = closure_path(closure, static_cast<int>(i));
    cyc.pop_back();  // last node repeats the first
    lasso.cycle = std::move(cyc);
    // Stem: tree path from the root to the cycle entry.
    StructureInfo info;
    check_structure(d, info);
    std::vector<std::string> stem;
    std::string cur = lasso.cycle.front();
    while (cur != d.root) {
      cur = info.parent.at(cur);
      stem.push_back(cur);
    }
    std::reverse(stem.begin(), stem.end());
    lasso.stem = std::move(stem);
    return {false, lasso};
  }
  return {true, std::nullopt};
}

bool lasso_has_progressing_thread(const Derivation& d, const Lasso& lasso,
                                  const OpSemRegistry& reg) {
  OccIndex occ;
  ProgressGraph g = build_progress_graph(d, reg, occ);
  auto edge_rel = [&](const std::string& from, const std::string& to) -> const Rel* {
    auto it = g.out.find(from);
    if (it == g.out.end()) return nullptr;
    for (std::size_t e : it->second)
      if (g.edges[e].to == to) return &g.edges[e].rel;
    return nullptr;
  };
  std::size_t n = lasso.cycle.size();
  for (std::size_t rot = 0; rot < n; ++rot) {
    Rel around;
    bool first = true;
    for (std::size_t k = 0; k < n; ++k) {
      const std::string& a = lasso.cycle[(rot + k) % n];
      const std::string& b = lasso.cycle[(rot + k + 1) % n];
      const Rel* r = edge_rel(a, b);
      if (!r) return false;  // malformed lasso
      around = first ? *r : compose(around, *r);
      first = false;
    }
    // All powers of the cycle relation until repetition.
    std::set<Rel> powers;
    Rel cur = around;
    while (powers.insert(cur).second) {
      if (has_progress_diagonal(cur)) return true;
      cur = compose(cur, around);
    }
  }
  return false;
}

std::optional<CheckFailure> check_proof(const Derivation& d, const Sequent& expected,
                                        const OpSemRegistry& reg,
                                        const CheckOptions& opts) {
  if (auto v = check_local(d, reg, opts))
    return CheckFailure{"local", v->node + ": " + v->reason, std::nullopt};
  if (!sequent_equal(d.nodes.at(d.root).sequent, expected))
    return CheckFailure{"conclusion",
                        "root proves " + render(d.nodes.at(d.root).sequent) +
                            " but " + render(expected) + " was expected",
                        std::nullopt};
  ProgressResult pr = check_progress(d, reg);
  if (!pr.progressing) {
    std::string detail = "non-progressing cycle through";
    for (const auto& id : pr.lasso->cycle) detail += " " + id;
    return CheckFailure{"progress", detail, pr.lasso};
  }
  return std::nullopt;
}

namespace {

struct Unfolder {
  const Derivation& src;
  Derivation out;
  std::size_t counter = 0;

  std::string clone(const std::string& id, std::size_t budget) {
    const ProofNode& node = src.nodes.at(id);
    if (node.rule.rule == RuleId::Loop) {
      if (budget > 0) return clone(*node.rule.loop_target, budget - 1);
      std::string nid = "u" + std::to_string(counter++);
      out.nodes[nid] = ProofNode{node.sequent, RuleApp{RuleId::Open, {}, {}, {}, {}, {}}};
      return nid;
    }
    std::string nid = "u" + std::to_string(counter++);
    out.nodes[nid] = ProofNode{node.sequent, node.rule};
    std::vector<std::string> kids;
    for (const auto& pid : node.rule.premises) kids.push_back(clone(pid, budget));
    out.nodes[nid].rule.premises = std::move(kids);
    out.nodes[nid].rule.loop_target.reset();
    return nid;
  }
};

}  // namespace

Derivation unfold(const Derivation& d, std::size_t depth) {
  Unfolder u{d, {}, 0};
  u.out.root = u.clone(d.root, depth);
  return u.out;
}

namespace {

bool approx_rec(const Derivation& a, const std::string& ida, const Derivation& b,
                const std::string& idb) {
  const ProofNode& na = a.nodes.at(ida);
  const ProofNode& nb = b.nodes.at(idb);
  if (!sequent_equal(na.sequent, nb.sequent)) return false;
  if (na.rule.rule == RuleId::Open) return true;
  if (na.rule.rule != nb.rule.rule) return false;
  if (na.rule.premises.size() != nb.rule.premises.size()) return false;
  for (std::size_t i = 0; i < na.rule.premises.size(); ++i)
    if (!approx_rec(a, na.rule.premises[i], b, nb.rule.premises[i])) return false;
  return true;
}

}  // namespace

bool is_approximation(const Derivation& a, const Derivation& b) {
  return approx_rec(a, a.root, b, b.root);
}

DecomposeResult decompose(const Derivation& d, const OpSemRegistry& reg) {
  DecomposeResult res;
  res.prefix = unfold(d, 0);
  OccIndex occ;
  ProgressGraph g = build_progress_graph(d, reg, occ);
  // For every back-edge, find a star/foreign box at the loop node that starts
  // a progressing thread around its cycle.
  for (const auto& [id, node] : d.nodes) {
    if (node.rule.rule != RuleId::Loop) continue;
    const std::string& target = *node.rule.loop_target;
    // Nodes of the cycle: tree path target .. id, then the back-edge.
    StructureInfo info;
    check_structure(d, info);
    std::vector<std::string> path{id};
    std::string cur = id;
    while (cur != target) {
      cur = info.parent.at(cur);
      path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());  // target .. id
    Lasso lasso;
    lasso.cycle = path;
    FormulaPtr designated;
    const auto& formulas = occ.at(d, target);
    // Probe each star/foreign box: restrict the cycle relation's diagonal.
    auto edge_rel = [&](const std::string& from, const std::string& to) -> const Rel* {
      auto it = g.out.find(from);
      if (it == g.out.end()) return nullptr;
      for (std::size_t e : it->second)
        if (g.edges[e].to == to) return &g.edges[e].rel;
      return nullptr;
    };
    Rel around;
    bool first = true;
    for (std::size_t k = 0; k + 1 <= path.size(); ++k) {
      const std::string& a = path[k];
      const std::string& b = path[(k + 1) % path.size()];
      const Rel* r = edge_rel(a, b);
      if (!r) { around.clear(); break; }
      around = first ? *r : compose(around, *r);
      first = false;
    }
    std::set<Rel> powers;
    Rel pw = around;
    std::set<int> good;
    while (powers.insert(pw).second) {
      for (const auto& [i, j, f] : pw)
        if (i == j && (f & 1)) good.insert(i);
      pw = compose(pw, around);
    }
    for (int i : good)
      if (is_sf_box(formulas[i])) { designated = formulas[i]; break; }
    if (!designated) {
      for (const auto& f : formulas)
        if (is_sf_box(f)) { designated = f; break; }
    }
    if (designated)
      res.open_premises.push_back({node.sequent, designated});
  }
  return res;
}

std::optional<std::vector<Sequent>> schema_premises(const Sequent& c,
                                                    const RuleApp& r,
                                                    const OpSemRegistry& reg) {
  auto none = std::optional<std::vector<Sequent>>{};
  switch (r.rule) {
    case RuleId::Top:
    case RuleId::Ax:
    case RuleId::BoxEmpty:
      return std::vector<Sequent>{};
    case RuleId::Cut:
    case RuleId::Loop:
    case RuleId::Open:
      return none;
    case RuleId::W:
    case RuleId::DiaEmpty: {
      if (!r.principal || !contains(c, *r.principal)) return none;
      return std::vector<Sequent>{seq_minus(c, *r.principal)};
    }
    case RuleId::K: {
      if (!r.k_prog) return none;
      FormulaPtr boxf;
      Sequent gamma;
      for (const auto& f : c) {
        if (f->kind == FKind::Box && equal(f->prog, *r.k_prog)) {
          if (boxf) return none;
          boxf = f;
        } else if (f->kind == FKind::Dia && equal(f->prog, *r.k_prog)) {
          gamma.insert(f->left);
        } else {
          return none;
        }
      }
      if (!boxf) return none;
      return std::vector<Sequent>{seq_plus(gamma, boxf->left)};
    }
    case RuleId::BoxO:
    case RuleId::DiaO: {
      if (!r.principal || !contains(c, *r.principal)) return none;
      const FormulaPtr& rho = *r.principal;
      if (rho->prog->kind == ProgKind::Terminated) return none;
      std::vector<FormulaPtr> actives = op_actives(rho, reg);
      Sequent base = seq_minus(c, rho);
      std::vector<Sequent> out;
      if (r.rule == RuleId::BoxO) {
        for (const auto& a : actives) out.push_back(seq_plus(base, a));
      } else {
        Sequent p = base;
        for (const auto& a : actives) p.insert(a);
        out.push_back(std::move(p));
      }
      return out;
    }
    default: {
      if (!r.principal || !contains(c, *r.principal)) return none;
      auto actives = rule_actives(r.rule, *r.principal);
      if (!actives) return none;
      std::vector<Sequent> out;
      Sequent base = seq_minus(c, *r.principal);
      for (const auto& a : *actives) out.push_back(seq_union(base, a));
      return out;
    }
  }
}

std::string fresh_node_id(const Derivation& d, const std::string& prefix) {
  std::size_t i = d.nodes.size();
  std::string id;
  do {
    id = prefix + std::to_string(i++);
  } while (d.nodes.count(id));
  return id;
}

}  // namespace opdl
