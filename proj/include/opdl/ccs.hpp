// CCS with guarded recursion: syntax, the structural transition rules, the
// guardedness check, and the adapter registering CCS as an operational
// semantics (tau is identified with the silent label).
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opdl/opsem.hpp"

namespace opdl {

enum class CcsActKind { Act, CoAct, Tau };

struct CcsAction {
  CcsActKind kind = CcsActKind::Tau;
  std::string name;  // empty for Tau
};

CcsAction ccs_co(const CcsAction& a);
bool operator==(const CcsAction& a, const CcsAction& b);
std::string render_action(const CcsAction& a);

struct CcsProcess;
using CcsPtr = std::shared_ptr<const CcsProcess>;

enum class CcsKind { Nil, Prefix, Par, Sum, Restrict, Name };

struct CcsProcess {
  CcsKind kind;
  CcsAction act;     // Prefix
  std::string name;  // Restrict: restricted action; Name: definition name
  CcsPtr left;       // Prefix continuation, Par/Sum left, Restrict body
  CcsPtr right;      // Par/Sum right
};

CcsPtr ccs_nil();
CcsPtr ccs_prefix(CcsAction a, CcsPtr p);
CcsPtr ccs_par(CcsPtr p, CcsPtr q);
CcsPtr ccs_sum(CcsPtr p, CcsPtr q);
CcsPtr ccs_restrict(const std::string& a, CcsPtr p);
CcsPtr ccs_name(const std::string& x);

int compare(const CcsPtr& a, const CcsPtr& b);
std::string render_ccs(const CcsPtr& p);

using CcsDefs = std::map<std::string, CcsPtr>;

// Closure of the transition rules Pre/Par/Com/Sum/Res/Rec; duplicate-free.
std::vector<std::pair<CcsAction, CcsPtr>> ccs_step(const CcsPtr& p,
                                                   const CcsDefs& defs);

struct GuardednessViolation {
  std::string name;               // offending definition
  std::vector<std::string> path;  // constructor path to the bare name
};

// A definition set is guarded when no definition can reach a recursive call
// without crossing an action prefix (following names through other bodies).
std::optional<GuardednessViolation> check_guarded(const CcsDefs& defs);

// Operational semantics over canonically rendered CCS terms. Actions map to
// labels: a -> a, co-a -> a', tau -> the silent label. The designated
// terminated process is 0; other transition-free processes are merely stuck.
std::shared_ptr<const OpSemContract> ccs_as_opsem(CcsDefs defs);

}  // namespace opdl
