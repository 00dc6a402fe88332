// Surface syntax: parsers and canonical renderers for formulas, programs,
// CCS terms, choreographies, proof scripts, and frame descriptions.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "opdl/ccs.hpp"
#include "opdl/chor.hpp"
#include "opdl/kripke.hpp"
#include "opdl/opsem.hpp"
#include "opdl/proofkernel.hpp"
#include "opdl/syntax.hpp"

namespace opdl {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t pos)
      : std::runtime_error(message + " (at offset " + std::to_string(pos) + ")"),
        pos_(pos) {}
  std::size_t pos() const { return pos_; }

 private:
  std::size_t pos_;
};

// Formulas:  true false ident "..." ~f f&f f|f f->f f<->f [P]f <P>f (f)
// connective precedence: prefixes > & > | > -> (right) > <-> (right).
// Implication and equivalence are desugared into negation normal form.
FormulaPtr parse_formula(const std::string& text, const OpSemRegistry& reg);

// Programs:  skip abort eps ident "..." ?f P;P P+P P* ccs{...} chor{...} (P)
// precedence: * > ; > +, both binaries left-associative. Foreign bodies are
// canonicalized through the registered semantics.
ProgramPtr parse_program(const std::string& text, const OpSemRegistry& reg);

// Comma-separated formulas (the empty string is the empty sequent).
Sequent parse_sequent(const std::string& text, const OpSemRegistry& reg);

// CCS:  0 act.P 'act.P tau.P P|P P+P new act in P Name (P)
// precedence: prefix > + > | > new..in (which extends right).
CcsPtr parse_ccs_term_strict(const std::string& text);

// Choreographies:  0 | I; C | if p.b {C} else {C}; C | Name
// instructions:    p.x := e | p.e -> q.x | p -> q[l] | Name#p
ChorPtr parse_chor_term_strict(const std::string& text);

// Definition files: one `Name := term` per line, `%` comments, blank lines.
CcsDefs parse_ccs_file(const std::string& text);
ChorDefs parse_chor_file(const std::string& text);

// Proof scripts are s-expressions:
//   (proof (root <id>)
//     (node <id> (sequent "f" ...) (rule <name> [<target>])
//       [(principal "f")] [(cut "f")] [(prog "P")] [(premises <id> ...)]) ...)
Derivation parse_proof(const std::string& text, const OpSemRegistry& reg);
std::string render_proof(const Derivation& d);

// Frames as JSON: {"worlds": n, "atoms": {"p": [w...]},
//                  "labels": {"a": [[from, to]...]}}.
KripkeFrame parse_frame_json(const std::string& text);
std::string render_frame_json(const KripkeFrame& frame);

}  // namespace opdl
