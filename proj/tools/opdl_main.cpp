// Command-line front door: parsing, semantics exploration, model checking,
// proof checking, proof search, and cut elimination.
//
// Exit codes: 0 = success / property holds; 1 = checked and fails
// (invalid proof, inequivalent programs, countermodel found); 2 = usage or
// parse error; 3 = budget exhausted / inconclusive.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "opdl/ccs.hpp"
#include "opdl/chor.hpp"
#include "opdl/cutelim.hpp"
#include "opdl/frontend.hpp"
#include "opdl/kripke.hpp"
#include "opdl/prover.hpp"

using namespace opdl;

namespace {

constexpr int kOk = 0, kFails = 1, kUsage = 2, kExhausted = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::string ccs_file, chor_file, frame_file;
  std::size_t budget = 20000, depth = 6, fuel = 10000, seed = 1;
  bool atomic_k = false, dot = false, trace = false;

  OpSemRegistry reg;
  std::optional<KripkeFrame> frame;

  void load() {
    if (!ccs_file.empty()) {
      CcsDefs defs = parse_ccs_file(slurp(ccs_file));
      if (auto g = check_guarded(defs))
        throw std::runtime_error("unguarded recursion in definition " + g->name);
      reg.add(ccs_as_opsem(std::move(defs)));
    } else {
      reg.add(ccs_as_opsem({}));
    }
    if (!chor_file.empty())
      reg.add(chor_as_opsem(parse_chor_file(slurp(chor_file))));
    else
      reg.add(chor_as_opsem({}));
    if (!frame_file.empty()) frame = parse_frame_json(slurp(frame_file));
  }

  // Program arguments: with --ccs they are CCS terms, with --chor they are
  // choreographies; a "kleene:" prefix forces the regular-program grammar.
  ProgramPtr program(const std::string& text) {
    if (text.rfind("kleene:", 0) == 0)
      return parse_program(text.substr(7), reg);
    if (!ccs_file.empty()) return make_foreign("ccs", text, reg);
    if (!chor_file.empty()) return make_foreign("chor", text, reg);
    return parse_program(text, reg);
  }

  SearchBudget search_budget() const {
    return SearchBudget{budget, std::max<std::size_t>(depth, 64) * 8, budget};
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--ccs", c.ccs_file, "CCS definition file");
  cmd->add_option("--chor", c.chor_file, "choreography definition file");
  cmd->add_option("--frame", c.frame_file, "Kripke frame (JSON)");
  cmd->add_option("--budget", c.budget, "search/state budget");
  cmd->add_option("--depth", c.depth, "depth (traces, unfolding)");
  cmd->add_option("--fuel", c.fuel, "cut-elimination fuel");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_flag("--atomic-k", c.atomic_k, "restrict K to one-step modalities");
  cmd->add_flag("--dot", c.dot, "emit DOT");
  cmd->add_flag("--trace", c.trace, "dump intermediate derivations");
}

int cmd_parse(Common& c, const std::string& kind, const std::string& text) {
  if (kind == "formula") {
    std::cout << render(parse_formula(text, c.reg)) << "\n";
  } else if (kind == "program") {
    std::cout << render(parse_program(text, c.reg)) << "\n";
  } else if (kind == "sequent") {
    std::cout << render(parse_sequent(text, c.reg)) << "\n";
  } else if (kind == "ccs") {
    std::cout << render_ccs(parse_ccs_term_strict(text)) << "\n";
  } else if (kind == "chor") {
    std::cout << render_chor(parse_chor_term_strict(text)) << "\n";
  } else {
    std::cerr << "unknown kind '" << kind
              << "' (formula|program|sequent|ccs|chor)\n";
    return kUsage;
  }
  return kOk;
}

int cmd_lts(Common& c, const std::string& text) {
  Lts l = explore(c.program(text), c.reg, c.budget);
  if (c.dot) {
    std::cout << "digraph lts {\n";
    for (std::size_t i = 0; i < l.states.size(); ++i)
      std::cout << "  s" << i << " [label=\"" << render(l.states[i]) << "\"];\n";
    for (const auto& [a, lab, b] : l.edges)
      std::cout << "  s" << a << " -> s" << b << " [label=\"" << render(lab)
                << "\"];\n";
    std::cout << "}\n";
  } else {
    for (std::size_t i = 0; i < l.states.size(); ++i)
      std::cout << "state " << i << ": " << render(l.states[i]) << "\n";
    for (const auto& [a, lab, b] : l.edges)
      std::cout << a << " --" << render(lab) << "--> " << b << "\n";
  }
  if (l.truncated) {
    std::cout << "truncated\n";
    return kExhausted;
  }
  return kOk;
}

int cmd_traces(Common& c, const std::string& text) {
  for (const auto& t : traces_upto(c.program(text), c.reg, c.depth, c.budget))
    std::cout << (t.empty() ? "<empty>" : render_trace(t)) << "\n";
  return kOk;
}

int cmd_equiv(Common& c, const std::string& pt, const std::string& qt) {
  TraceVerdict v = trace_equiv(c.program(pt), c.program(qt), c.reg, c.budget);
  switch (v.kind) {
    case TraceVerdictKind::Equivalent:
      std::cout << "equivalent\n";
      return kOk;
    case TraceVerdictKind::Distinguished:
      std::cout << "distinguished: " << render_trace(v.witness) << " (side "
                << v.witness_side << ")\n";
      return kFails;
    default:
      std::cout << "inconclusive: " << v.reason << "\n";
      return kExhausted;
  }
}

int cmd_included(Common& c, const std::string& pt, const std::string& qt) {
  InclusionVerdict v = trace_included(c.program(pt), c.program(qt), c.reg, c.budget);
  switch (v.kind) {
    case InclusionKind::Included:
      std::cout << "included\n";
      return kOk;
    case InclusionKind::Counterexample:
      std::cout << "counterexample: " << render_trace(v.witness) << "\n";
      return kFails;
    default:
      std::cout << "inconclusive: " << v.reason << "\n";
      return kExhausted;
  }
}

int cmd_mc(Common& c, const std::string& text) {
  if (!c.frame) {
    std::cerr << "mc requires --frame\n";
    return kUsage;
  }
  FormulaPtr f = parse_formula(text, c.reg);
  EvalError err;
  auto ws = eval_formula(*c.frame, f, c.reg, c.budget, &err);
  if (!ws) {
    std::cout << "inconclusive: " << err.reason << "\n";
    return kExhausted;
  }
  std::cout << "worlds:";
  bool all = true;
  for (std::size_t w = 0; w < ws->size(); ++w) {
    if ((*ws)[w])
      std::cout << " " << w;
    else
      all = false;
  }
  std::cout << "\n" << (all ? "valid" : "invalid") << "\n";
  return all ? kOk : kFails;
}

int cmd_countermodel(Common& c, const std::string& text) {
  FormulaPtr f = parse_formula(text, c.reg);
  auto cm = find_countermodel(f, c.reg, 6, 400, c.seed, c.budget);
  if (!cm) {
    std::cout << "no countermodel found\n";
    return kFails;
  }
  std::cout << "countermodel at world " << cm->world << "\n"
            << render_frame_json(cm->frame) << "\n";
  return kOk;
}

int report_check(const Derivation& d, const Sequent& goal, Common& c) {
  CheckOptions opts;
  opts.atomic_k = c.atomic_k;
  opts.allow_open = true;
  auto fail = check_proof(d, goal, c.reg, opts);
  if (!fail) {
    std::cout << "local: ok\nprogress: ok\n";
    return kOk;
  }
  if (fail->stage == "progress") {
    std::cout << "local: ok\nprogress: FAIL (";
    if (fail->lasso && !fail->lasso->cycle.empty()) {
      std::cout << "lasso: ";
      for (const auto& n : fail->lasso->cycle) std::cout << n << "->";
      std::cout << fail->lasso->cycle.front();
    } else {
      std::cout << fail->detail;
    }
    std::cout << ")\n";
  } else {
    std::cout << fail->stage << ": FAIL (" << fail->detail << ")\n";
  }
  return kFails;
}

int cmd_check(Common& c, const std::string& path) {
  Derivation d = parse_proof(slurp(path), c.reg);
  return report_check(d, d.nodes.at(d.root).sequent, c);
}

int cmd_prove(Common& c, const std::string& text) {
  Sequent goal = parse_sequent(text, c.reg);
  ProveResult r = prove(goal, c.reg, c.search_budget());
  switch (r.status) {
    case ProveStatus::Proved:
      std::cout << render_proof(r.derivation);
      return kOk;
    case ProveStatus::Failed:
      std::cout << "failed\n";
      for (const auto& s : r.stuck) std::cout << "stuck: " << render(s) << "\n";
      return kFails;
    default:
      std::cout << "exhausted\n";
      return kExhausted;
  }
}

int cmd_prove_equiv(Common& c, const std::string& pt, const std::string& qt) {
  auto [fwd, bwd] = prove_box_equiv(c.program(pt), c.program(qt), c.reg,
                                    c.search_budget());
  auto word = [](const ProveResult& r) {
    return r.status == ProveStatus::Proved   ? "proved"
           : r.status == ProveStatus::Failed ? "failed"
                                             : "exhausted";
  };
  std::cout << "left-includes-right: " << word(fwd) << "\n"
            << "right-includes-left: " << word(bwd) << "\n";
  for (const ProveResult* r : {&fwd, &bwd}) {
    if (r->status == ProveStatus::Failed)
      std::cout << "distinguishing trace: "
                << (r->witness.empty() ? "<empty>" : render_trace(r->witness))
                << "\n";
  }
  if (fwd.status == ProveStatus::Proved && bwd.status == ProveStatus::Proved) {
    std::cout << "equivalent\n";
    if (c.trace) std::cout << render_proof(fwd.derivation)
                           << render_proof(bwd.derivation);
    return kOk;
  }
  if (fwd.status == ProveStatus::Failed || bwd.status == ProveStatus::Failed) {
    std::cout << "inequivalent\n";
    return kFails;
  }
  std::cout << "exhausted\n";
  return kExhausted;
}

int cmd_cutelim(Common& c, const std::string& path) {
  Derivation d = parse_proof(slurp(path), c.reg);
  EliminateResult r = eliminate(d, c.depth, c.fuel, c.reg);
  if (c.trace) {
    for (std::size_t i = 0; i < r.trace.sigmas.size(); ++i) {
      std::cout << "%% sigma " << i;
      if (i > 0)
        std::cout << " (" << r.trace.log[i - 1].first << " "
                  << step_name(r.trace.log[i - 1].second) << ")";
      std::cout << "\n" << render_proof(r.trace.sigmas[i]);
    }
  }
  std::cout << render_proof(r.cut_free);
  if (r.fuel_exhausted) {
    std::cout << "%% fuel exhausted\n";
    return kExhausted;
  }
  return kOk;
}

int cmd_template(Common& c, const std::string& name,
                 const std::vector<std::string>& phi,
                 const std::vector<std::string>& psi,
                 const std::vector<std::string>& alpha,
                 const std::vector<std::string>& beta,
                 const std::vector<std::string>& gamma, std::size_t n) {
  TemplateBindings tb;
  if (!phi.empty()) tb.formulas["phi"] = parse_formula(phi.back(), c.reg);
  if (!psi.empty()) tb.formulas["psi"] = parse_formula(psi.back(), c.reg);
  if (!alpha.empty()) tb.programs["alpha"] = c.program(alpha.back());
  if (!beta.empty()) tb.programs["beta"] = c.program(beta.back());
  for (const auto& g : gamma) tb.gamma.push_back(parse_formula(g, c.reg));
  tb.n = n;
  Derivation d = derive_template(name, tb, c.reg);
  std::cout << render_proof(d);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opdl: a dynamic-logic workbench over pluggable operational "
               "semantics"};
  app.require_subcommand(1);
  Common c;

  std::string kind, text, text2, path, name;
  std::vector<std::string> phi, psi, alpha, beta, gamma;
  std::size_t n = 0;

  auto* sc_parse = app.add_subcommand("parse", "parse and canonically render");
  sc_parse->add_option("kind", kind)->required();
  sc_parse->add_option("text", text)->required();
  auto* sc_render = app.add_subcommand("render", "alias of parse");
  sc_render->add_option("kind", kind)->required();
  sc_render->add_option("text", text)->required();
  auto* sc_lts = app.add_subcommand("lts", "explore the transition graph");
  sc_lts->add_option("program", text)->required();
  auto* sc_traces = app.add_subcommand("traces", "traces up to --depth");
  sc_traces->add_option("program", text)->required();
  auto* sc_equiv = app.add_subcommand("equiv", "trace equivalence");
  sc_equiv->add_option("p", text)->required();
  sc_equiv->add_option("q", text2)->required();
  auto* sc_incl = app.add_subcommand("included", "Tr(p) contains Tr(q)");
  sc_incl->add_option("p", text)->required();
  sc_incl->add_option("q", text2)->required();
  auto* sc_mc = app.add_subcommand("mc", "model-check a formula on --frame");
  sc_mc->add_option("formula", text)->required();
  auto* sc_cm = app.add_subcommand("countermodel", "search for a refuting frame");
  sc_cm->add_option("formula", text)->required();
  auto* sc_check = app.add_subcommand("check", "check a proof script");
  sc_check->add_option("file", path)->required();
  auto* sc_prove = app.add_subcommand("prove", "search for a proof");
  sc_prove->add_option("sequent", text)->required();
  auto* sc_pe = app.add_subcommand("prove-equiv", "trace-equivalence certificate");
  sc_pe->add_option("p", text)->required();
  sc_pe->add_option("q", text2)->required();
  auto* sc_ce = app.add_subcommand("cutelim", "eliminate cuts from a proof");
  sc_ce->add_option("file", path)->required();
  auto* sc_tpl = app.add_subcommand("template", "instantiate a derivation template");
  sc_tpl->add_option("name", name)->required();
  sc_tpl->add_option("--phi", phi);
  sc_tpl->add_option("--psi", psi);
  sc_tpl->add_option("--alpha", alpha);
  sc_tpl->add_option("--beta", beta);
  sc_tpl->add_option("--gamma", gamma);
  sc_tpl->add_option("--n", n);

  for (CLI::App* sc : {sc_parse, sc_render, sc_lts, sc_traces, sc_equiv, sc_incl,
                       sc_mc, sc_cm, sc_check, sc_prove, sc_pe, sc_ce, sc_tpl})
    add_common(sc, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    c.load();
    if (sc_parse->parsed() || sc_render->parsed()) return cmd_parse(c, kind, text);
    if (sc_lts->parsed()) return cmd_lts(c, text);
    if (sc_traces->parsed()) return cmd_traces(c, text);
    if (sc_equiv->parsed()) return cmd_equiv(c, text, text2);
    if (sc_incl->parsed()) return cmd_included(c, text, text2);
    if (sc_mc->parsed()) return cmd_mc(c, text);
    if (sc_cm->parsed()) return cmd_countermodel(c, text);
    if (sc_check->parsed()) return cmd_check(c, path);
    if (sc_prove->parsed()) return cmd_prove(c, text);
    if (sc_pe->parsed()) return cmd_prove_equiv(c, text, text2);
    if (sc_ce->parsed()) return cmd_cutelim(c, path);
    if (sc_tpl->parsed())
      return cmd_template(c, name, phi, psi, alpha, beta, gamma, n);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
