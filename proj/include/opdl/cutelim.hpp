// The cut-elimination rewrite system on loop-free derivations: redex
// enumeration, single steps, cut-free prefixes, and the canonical bottom-up
// elimination strategy.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "opdl/proofkernel.hpp"

namespace opdl {

enum class StepChoice {
  WeakLeft, WeakRight,
  AxLeft, AxRight,
  EpsKey, EmptyKey, TestKey, KKey, ChoiceKey, SeqKey, StarKey, AndOrKey, OKey,
  CommuteLeftUnary, CommuteLeftBinary, CommuteRightUnary, CommuteRightBinary,
};

std::string step_name(StepChoice c);

// All step choices, in the order the canonical strategy tries them.
const std::vector<StepChoice>& step_order();

struct ReductionTrace {
  std::vector<Derivation> sigmas;  // sigma_0 .. sigma_k
  std::vector<std::pair<std::string, StepChoice>> log;  // (cut node, step)
};

// Cut nodes with their applicable steps; bottom-most cuts (those without a
// cut below them) are listed first, in depth-first order.
std::vector<std::pair<std::string, std::vector<StepChoice>>> cut_redexes(
    const Derivation& d, const OpSemRegistry& reg);

// One rewrite at `node` per the chosen step. The conclusion is preserved;
// throws std::invalid_argument when the choice does not apply.
Derivation apply_step(const Derivation& d, const std::string& node,
                      StepChoice choice, const OpSemRegistry& reg);

// Greatest cut-free approximation: prunes at every bottom-most cut, leaving
// an open premise with the cut's conclusion.
Derivation cf_prefix(const Derivation& d);

struct EliminateResult {
  Derivation cut_free;   // cf_prefix of the final derivation
  ReductionTrace trace;
  bool fuel_exhausted = false;
};

// Unfolds to `unfold_depth`, then repeatedly rewrites the bottom-most,
// leftmost cut with the first applicable step in step_order() (Lafont pairs
// resolve to the left premise) until cut-free or out of fuel. Requires a
// locally valid derivation whose K steps use one-step modality programs.
EliminateResult eliminate(const Derivation& d, std::size_t unfold_depth,
                          std::size_t fuel, const OpSemRegistry& reg);

}  // namespace opdl
