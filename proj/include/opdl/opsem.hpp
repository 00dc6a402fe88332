// Pluggable operational semantics: the step contract, the registry, the
// Kleene (regular-program) instance, LTS exploration, traces, and the
// automata-based trace-equivalence/inclusion oracle.
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "opdl/syntax.hpp"

namespace opdl {

// A transition label is itself a (small) program: the terminated program for
// the silent label eps, an instruction, or a test.
using Transition = std::pair<ProgramPtr /*label*/, ProgramPtr /*successor*/>;

// An operational semantics over canonically rendered term strings.
class OpSemContract {
 public:
  virtual ~OpSemContract() = default;
  virtual std::string id() const = 0;
  // Canonical form of a state (parse + render); throws on malformed terms.
  virtual std::string canon(const std::string& state) const = 0;
  // Finite transition set; successors are canonical.
  virtual std::vector<std::pair<ProgramPtr, std::string>> step(
      const std::string& state) const = 0;
  // True iff the state is the designated terminated program of the semantics.
  virtual bool is_epsilon_state(const std::string& state) const = 0;
  // True iff the state has no transitions (every epsilon state qualifies).
  virtual bool is_terminated(const std::string& state) const {
    return step(state).empty();
  }
};

class OpSemRegistry {
 public:
  void add(std::shared_ptr<const OpSemContract> contract);
  // Null when the id is unknown; "kleene" is implicit and has no contract.
  const OpSemContract* find(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<const OpSemContract>> contracts_;
};

// Builds a foreign program atom, canonicalizing the term through the
// registered contract; the designated terminated state becomes p_term() so
// that exactly one program denotes termination.
ProgramPtr make_foreign(const std::string& sem_id, const std::string& term,
                        const OpSemRegistry& reg);

// The Kleene rules over regular programs. Foreign atoms delegate to their
// contract; a foreign head of a sequential composition steps by congruence.
// Sequential compositions headed by other compound programs have no steps.
std::vector<Transition> kleene_step(const ProgramPtr& p, const OpSemRegistry& reg);

// Transitions of any program: contract steps for foreign atoms (successors
// wrapped back into programs), kleene_step otherwise. Result is sorted by
// (label, successor) rendering and duplicate-free.
std::vector<Transition> op_step(const ProgramPtr& p, const OpSemRegistry& reg);

struct Lts {
  std::vector<ProgramPtr> states;
  std::vector<std::tuple<std::size_t, ProgramPtr, std::size_t>> edges;
  std::size_t initial = 0;
  bool truncated = false;
};

// Breadth-first reachable transition graph, cut at max_states.
Lts explore(const ProgramPtr& start, const OpSemRegistry& reg,
            std::size_t max_states);

// A trace is the sequence of non-silent labels along a path.
using Trace = std::vector<ProgramPtr>;

std::string render_trace(const Trace& t);

// All traces of length <= n (prefix-closed; includes the empty trace).
std::vector<Trace> traces_upto(const ProgramPtr& start, const OpSemRegistry& reg,
                               std::size_t n, std::size_t max_states = 100000);

// True iff `t` labels some path from `start` (after erasing silent steps).
bool trace_accepted(const ProgramPtr& start, const OpSemRegistry& reg,
                    const Trace& t, std::size_t max_states = 100000);

enum class TraceVerdictKind { Equivalent, Distinguished, Inconclusive };

struct TraceVerdict {
  TraceVerdictKind kind;
  Trace witness;        // Distinguished: a shortest separating trace
  int witness_side;     // 1 = trace of the first program only, 2 = second only
  std::string reason;   // Inconclusive
};

// Decides trace-language equality via subset construction and a
// Hopcroft-Karp style congruence search; Inconclusive when exploration
// truncates or determinization exceeds its cap.
TraceVerdict trace_equiv(const ProgramPtr& p, const ProgramPtr& q,
                         const OpSemRegistry& reg, std::size_t max_states);

enum class InclusionKind { Included, Counterexample, Inconclusive };

struct InclusionVerdict {
  InclusionKind kind;
  Trace witness;       // Counterexample: a trace of q outside Tr(p)
  std::string reason;  // Inconclusive
};

// Decides Tr(p) >= Tr(q).
InclusionVerdict trace_included(const ProgramPtr& p, const ProgramPtr& q,
                                const OpSemRegistry& reg, std::size_t max_states);

}  // namespace opdl
