// Symbolic choreographies: syntax, process-name (pn) computation, the
// out-of-order transition rules, and the adapter registering choreographies
// as an operational semantics whose test instructions become logical tests.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "opdl/opsem.hpp"

namespace opdl {

enum class ChorInstrKind { Assign, Com, Sel, Cont, TestPos, TestNeg };

struct ChorInstr {
  ChorInstrKind kind;
  std::string p;     // acting process (sender for Com/Sel)
  std::string q;     // receiver (Com/Sel)
  std::string var;   // Assign/Com target variable
  std::string expr;  // Assign/Com expression, Sel label, Test condition
  std::string name;  // Cont: definition name
};

ChorInstr chor_assign(std::string p, std::string var, std::string expr);
ChorInstr chor_com(std::string p, std::string expr, std::string q, std::string var);
ChorInstr chor_sel(std::string p, std::string q, std::string lbl);
ChorInstr chor_cont(std::string name, std::string p);
ChorInstr chor_test(std::string p, std::string cond, bool positive);

int compare(const ChorInstr& a, const ChorInstr& b);
std::string render_instr(const ChorInstr& i);

struct Choreography;
using ChorPtr = std::shared_ptr<const Choreography>;

enum class ChorKind { Nil, SeqI, Cond, Call };

struct Choreography {
  ChorKind kind;
  ChorInstr instr;   // SeqI
  std::string p;     // Cond: testing process
  std::string cond;  // Cond: condition
  ChorPtr left;      // SeqI continuation, Cond then-branch
  ChorPtr right;     // Cond else-branch
  ChorPtr cont;      // Cond continuation
  std::string name;  // Call
};

ChorPtr chor_nil();
ChorPtr chor_seqi(ChorInstr i, ChorPtr c);
ChorPtr chor_cond(std::string p, std::string cond, ChorPtr then_c, ChorPtr else_c,
                  ChorPtr cont);
ChorPtr chor_call(const std::string& name);

int compare(const ChorPtr& a, const ChorPtr& b);
std::string render_chor(const ChorPtr& c);

using ChorDefs = std::map<std::string, ChorPtr>;

std::set<std::string> pn(const ChorInstr& i);
std::set<std::string> pn(const ChorPtr& c, const ChorDefs& defs);

// Structural continuation append; appending a nontrivial continuation after a
// call is rejected (the language is tail-recursive).
ChorPtr chor_seq(const ChorPtr& c, const ChorPtr& k);

// Closure of the rules Atomic/I, Cond-Then/Else, Call, Delay-I, Delay-Cond.
// Labels are instructions; conditionals fire as positive/negative tests; a
// call to X with pn(X) = {q, p1, ..., pn} has one transition per joining
// process q, prefixing the remaining processes' continuation markers.
std::vector<std::pair<ChorInstr, ChorPtr>> chor_step(const ChorPtr& c,
                                                     const ChorDefs& defs);

// Operational semantics over canonically rendered choreographies. Tests map
// to logical tests over atoms named "p.cond"; other instructions map to
// labels named by their rendering. The terminated choreography is 0.
std::shared_ptr<const OpSemContract> chor_as_opsem(ChorDefs defs);

}  // namespace opdl
