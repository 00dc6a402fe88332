// Proof graphs (finite trees with back-edges), per-rule schema checking,
// the immediate-ancestor relation, and the progressing condition for
// non-wellfounded derivations.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opdl/opsem.hpp"
#include "opdl/syntax.hpp"

namespace opdl {

enum class RuleId {
  Top, Ax, W, Or, And, K, Cut,
  BoxEps, BoxEmpty, BoxTest, BoxChoice, BoxSeq, BoxStar,
  DiaEps, DiaEmpty, DiaTest, DiaChoice, DiaSeq, DiaStar,
  BoxO, DiaO,
  Loop,  // back-edge to an ancestor with an equal sequent
  Open,  // open premise (approximations and partial search states)
};

std::string rule_name(RuleId id);
std::optional<RuleId> rule_from_name(const std::string& name);

struct RuleApp {
  RuleId rule = RuleId::Open;
  std::optional<FormulaPtr> principal;    // structural rules and W
  std::optional<FormulaPtr> cut_formula;  // Cut
  std::optional<ProgramPtr> k_prog;       // K: the modality program
  std::vector<std::string> premises;      // child node ids (tree edges)
  std::optional<std::string> loop_target; // Loop
};

struct ProofNode {
  Sequent sequent;
  RuleApp rule;
};

struct Derivation {
  std::map<std::string, ProofNode> nodes;
  std::string root;
};

struct CheckOptions {
  bool atomic_k = false;   // restrict K to instruction labels
  bool allow_open = false; // accept open premises (approximations)
};

struct RuleViolation {
  std::string node;
  std::string reason;
};

// Structural well-formedness (tree rooted at `root`, back-edges to strict
// ancestors with equal sequents, all nodes reachable) plus exact per-rule
// schema checking. Operational rules enumerate their step sets through `reg`.
std::optional<RuleViolation> check_local(const Derivation& d,
                                         const OpSemRegistry& reg,
                                         const CheckOptions& opts = {});

struct OccRef {
  std::string node;
  FormulaPtr formula;
};

// The immediate ancestors of an occurrence, as occurrences in the premises
// (for a back-edge: in the loop target).
std::vector<OccRef> immediate_ancestors(const Derivation& d, const OccRef& occ,
                                        const OpSemRegistry& reg);

struct Lasso {
  std::vector<std::string> stem;   // root .. cycle entry (exclusive)
  std::vector<std::string> cycle;  // nodes of the offending cycle, in order
};

struct ProgressResult {
  bool progressing = false;
  std::optional<Lasso> lasso;  // witness when not progressing
};

// Decides whether every infinite branch of the loop-closed graph carries a
// progressing thread: a thread starting at a star- or foreign-program box
// that is unfolded (as the box principal of a K step, or as the principal of
// a box-star or operational-box rule) infinitely often. Requires
// check_local to have passed.
ProgressResult check_progress(const Derivation& d, const OpSemRegistry& reg);

// Exhaustively enumerates threads around one lasso; used to double-check
// NotProgressing verdicts.
bool lasso_has_progressing_thread(const Derivation& d, const Lasso& lasso,
                                  const OpSemRegistry& reg);

struct CheckFailure {
  std::string stage;  // "conclusion" | "local" | "progress"
  std::string detail;
  std::optional<Lasso> lasso;
};

// check_local, conclusion comparison, then check_progress.
std::optional<CheckFailure> check_proof(const Derivation& d, const Sequent& expected,
                                        const OpSemRegistry& reg,
                                        const CheckOptions& opts = {});

// Expands back-edges until every path has crossed loop targets `depth` times;
// remaining back-edges become open premises. The result is loop-free.
Derivation unfold(const Derivation& d, std::size_t depth);

// True iff `a` arises from `b` by pruning subtrees into open premises
// (the approximation order on loop-free derivations).
bool is_approximation(const Derivation& a, const Derivation& b);

struct DecomposeResult {
  Derivation prefix;  // finite open prefix
  std::vector<std::pair<Sequent, FormulaPtr>> open_premises;
};

// Cuts each infinite branch at a progressing-thread starting point; each open
// premise records its designated star/foreign box formula.
DecomposeResult decompose(const Derivation& d, const OpSemRegistry& reg);

// Fresh node-id helper shared by derivation builders.
std::string fresh_node_id(const Derivation& d, const std::string& prefix);

// The premise sequents prescribed by applying `r` at conclusion `c`, with the
// principal consumed ((c minus principal) plus actives). Rules without a
// fitting principal, and cut/loop/open, yield nullopt.
std::optional<std::vector<Sequent>> schema_premises(const Sequent& c,
                                                    const RuleApp& r,
                                                    const OpSemRegistry& reg);

}  // namespace opdl
