// Bounded goal-directed proof search, trace-inclusion certificate synthesis,
// and derivation templates for the standard axioms and derived rules.
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "opdl/proofkernel.hpp"

namespace opdl {

struct SearchBudget {
  std::size_t max_distinct_sequents = 20000;
  std::size_t max_depth = 400;
  std::size_t max_states = 100000;  // operational unfolding cap
};

enum class ProveStatus { Proved, Failed, Exhausted };

struct ProveResult {
  ProveStatus status = ProveStatus::Exhausted;
  Derivation derivation;        // Proved: passes check_proof against the goal
  std::vector<Sequent> stuck;   // Failed: unprovable leaves
  Trace witness;                // prove_box_impl Failed: a distinguishing trace
};

// Cut-free search: closure rules, then invertible rules in rendering order,
// then K steps (per box, with weakening) as backtracking choice points.
// Back-edges fold equal-sequent repeats; if the folded result is not
// progressing the search reruns without folding. Every Proved result has
// been validated with check_proof.
ProveResult prove(const Sequent& goal, const OpSemRegistry& reg,
                  const SearchBudget& budget = {});

// Certifies Tr(q) <= Tr(p) (completed traces) by proving
// |- <p>~@phi, [q]@phi for the reserved schematic atom @phi. On failure the
// witness is a trace of q that p cannot complete.
ProveResult prove_box_impl(const ProgramPtr& p, const ProgramPtr& q,
                           const OpSemRegistry& reg,
                           const SearchBudget& budget = {});

// Both inclusion directions: (Tr(q) <= Tr(p), Tr(p) <= Tr(q)).
std::pair<ProveResult, ProveResult> prove_box_equiv(const ProgramPtr& p,
                                                    const ProgramPtr& q,
                                                    const OpSemRegistry& reg,
                                                    const SearchBudget& budget = {});

// Schematic bindings for derive_template: formulas keyed "phi"/"psi",
// programs keyed "alpha"/"beta", `gamma` the side formulas of "star-to-n",
// and `n` its power.
struct TemplateBindings {
  std::map<std::string, FormulaPtr> formulas;
  std::map<std::string, ProgramPtr> programs;
  std::vector<FormulaPtr> gamma;
  std::size_t n = 0;
};

// Instantiates a named derivation template. Known names: "A-empty", "K",
// "A-eps", "A-test", "A-seq", "A-choice", "A-star", "A-O", "MP", "NEC",
// "LI", "star-to-n". "LI" and "star-to-n" produce open derivations (their
// hypotheses are open premises); the rest are closed. Throws
// std::invalid_argument on unknown names or missing bindings.
Derivation derive_template(const std::string& name, const TemplateBindings& b,
                           const OpSemRegistry& reg);

}  // namespace opdl
