// Core term language: formulas in negation normal form, regular programs with
// embedded foreign (operational) programs, sequents as formula sets, and the
// Fischer-Ladner closure.
#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace opdl {

struct Formula;
struct Program;
using FormulaPtr = std::shared_ptr<const Formula>;
using ProgramPtr = std::shared_ptr<const Program>;

enum class ProgKind {
  Terminated,  // the terminated program epsilon ("skip")
  Stuck,       // the empty program ("abort")
  Inst,        // atomic instruction / label
  Test,        // ?phi
  Seq,         // alpha ; beta
  Choice,      // alpha + beta
  Star,        // alpha*
  Foreign,     // quoted program of a registered operational semantics
};

struct Program {
  ProgKind kind;
  std::string name;  // Inst: label name; Foreign: semantics id
  std::string term;  // Foreign: canonical term text
  FormulaPtr test;   // Test payload
  ProgramPtr left;   // Seq/Choice left, Star body
  ProgramPtr right;  // Seq/Choice right
};

enum class FKind { Top, Bot, Pos, Neg, Or, And, Box, Dia };

struct Formula {
  FKind kind;
  std::string atom;  // Pos/Neg
  ProgramPtr prog;   // Box/Dia
  FormulaPtr left;   // Or/And left, Box/Dia body
  FormulaPtr right;  // Or/And right
};

// Constructors (structurally shared, immutable).
ProgramPtr p_term();
ProgramPtr p_stuck();
ProgramPtr p_inst(const std::string& label);
ProgramPtr p_test(FormulaPtr f);
ProgramPtr p_seq(ProgramPtr a, ProgramPtr b);
ProgramPtr p_choice(ProgramPtr a, ProgramPtr b);
ProgramPtr p_star(ProgramPtr a);
ProgramPtr p_foreign(const std::string& sem_id, const std::string& term);

FormulaPtr f_top();
FormulaPtr f_bot();
FormulaPtr f_pos(const std::string& atom);
FormulaPtr f_neg(const std::string& atom);
FormulaPtr f_or(FormulaPtr a, FormulaPtr b);
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_box(ProgramPtr p, FormulaPtr f);
FormulaPtr f_dia(ProgramPtr p, FormulaPtr f);

// Total syntactic order; 0 iff structurally equal.
int compare(const FormulaPtr& a, const FormulaPtr& b);
int compare(const ProgramPtr& a, const ProgramPtr& b);
bool equal(const FormulaPtr& a, const FormulaPtr& b);
bool equal(const ProgramPtr& a, const ProgramPtr& b);

struct FormulaLess {
  bool operator()(const FormulaPtr& a, const FormulaPtr& b) const {
    return compare(a, b) < 0;
  }
};

using Sequent = std::set<FormulaPtr, FormulaLess>;

bool sequent_equal(const Sequent& a, const Sequent& b);
bool contains(const Sequent& s, const FormulaPtr& f);
Sequent seq_minus(const Sequent& s, const FormulaPtr& f);
Sequent seq_plus(const Sequent& s, const FormulaPtr& f);
Sequent seq_union(const Sequent& a, const Sequent& b);
bool is_subset(const Sequent& a, const Sequent& b);

// Dual in negation normal form (involutive, size preserving).
FormulaPtr negate(const FormulaPtr& f);
// (~f) | g
FormulaPtr mk_implies(const FormulaPtr& f, const FormulaPtr& g);
// Conjunction of both implications.
FormulaPtr mk_iff(const FormulaPtr& f, const FormulaPtr& g);

std::size_t formula_size(const FormulaPtr& f);

// Canonical surface rendering (defined in frontend.cpp, declared here because
// internal tie-breaking keys on it).
std::string render(const FormulaPtr& f);
std::string render(const ProgramPtr& p);
std::string render(const Sequent& s);

class OpSemRegistry;  // opsem.hpp

struct FlResult {
  bool budget_exceeded = false;
  Sequent closure;  // meaningful only when !budget_exceeded
};

// Smallest superset of `gamma` closed under the Fischer-Ladner rules; boxes
// and diamonds over foreign programs additionally close under one-step
// operational unfolding through `reg`. Saturation past `max_size` formulas
// reports budget exhaustion instead of a partial set.
FlResult fl_closure(const Sequent& gamma, const OpSemRegistry& reg,
                    std::size_t max_size);

}  // namespace opdl
