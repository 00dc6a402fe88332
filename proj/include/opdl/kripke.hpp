// Finite Kripke frames and the compositional meaning function; foreign
// programs are interpreted by the least fixpoint of their one-step unfolding
// over the reachable state set.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opdl/opsem.hpp"
#include "opdl/syntax.hpp"

namespace opdl {

using WorldSet = std::vector<bool>;               // indexed by world
using AccRel = std::vector<std::vector<bool>>;    // [from][to]

struct KripkeFrame {
  std::size_t worlds = 0;
  std::map<std::string, WorldSet> atoms;
  std::map<std::string, AccRel> labels;  // "eps" is ignored: always identity
};

WorldSet ws_full(std::size_t n);
WorldSet ws_empty(std::size_t n);
bool ws_is_full(const WorldSet& w);
AccRel rel_identity(std::size_t n);
AccRel rel_empty(std::size_t n);
AccRel rel_compose(const AccRel& a, const AccRel& b);
AccRel rel_union(const AccRel& a, const AccRel& b);
bool rel_equal(const AccRel& a, const AccRel& b);

struct EvalError {
  std::string reason;  // budget exhaustion or registry failures
};

// Meaning of a formula as a world set. Missing atoms/labels default to empty
// interpretations. state_budget caps the foreign-program state sets explored
// by the fixpoint computation.
std::optional<WorldSet> eval_formula(const KripkeFrame& frame, const FormulaPtr& f,
                                     const OpSemRegistry& reg,
                                     std::size_t state_budget,
                                     EvalError* err = nullptr);

std::optional<AccRel> eval_program(const KripkeFrame& frame, const ProgramPtr& p,
                                   const OpSemRegistry& reg,
                                   std::size_t state_budget,
                                   EvalError* err = nullptr);

std::optional<bool> is_valid(const KripkeFrame& frame, const FormulaPtr& f,
                             const OpSemRegistry& reg, std::size_t state_budget,
                             EvalError* err = nullptr);

// A sequent means the disjunction of its formulas.
std::optional<bool> is_valid(const KripkeFrame& frame, const Sequent& s,
                             const OpSemRegistry& reg, std::size_t state_budget,
                             EvalError* err = nullptr);

// Deterministic in the seed: every atom membership and label edge is included
// independently with probability `density`.
KripkeFrame random_frame(std::uint64_t seed, std::size_t n_worlds,
                         const std::vector<std::string>& atoms,
                         const std::vector<std::string>& labels, double density);

struct Countermodel {
  KripkeFrame frame;
  std::size_t world;
};

// Random search for a frame and world where `f` fails.
std::optional<Countermodel> find_countermodel(const FormulaPtr& f,
                                              const OpSemRegistry& reg,
                                              std::size_t max_worlds,
                                              std::size_t samples,
                                              std::uint64_t seed,
                                              std::size_t state_budget = 10000);

}  // namespace opdl
