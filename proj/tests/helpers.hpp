// Shared test utilities: fixture loading, registries, and random term
// generators used by the property tests.
#pragma once

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opdl/ccs.hpp"
#include "opdl/chor.hpp"
#include "opdl/frontend.hpp"
#include "opdl/kripke.hpp"
#include "opdl/proofkernel.hpp"

namespace opdl::testing {

inline std::string fixtures_dir() {
  const char* env = std::getenv("OPDL_FIXTURES");
  if (!env) throw std::runtime_error("OPDL_FIXTURES not set");
  return std::string(env);
}

inline std::string read_fixture(const std::string& name) {
  std::string path = fixtures_dir() + "/" + name;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A registry with empty CCS and choreography definition environments.
inline OpSemRegistry base_registry() {
  OpSemRegistry reg;
  reg.add(ccs_as_opsem({}));
  reg.add(chor_as_opsem({}));
  return reg;
}

// A registry whose CCS environment holds the pi.ccs definitions.
inline OpSemRegistry pi_registry() {
  OpSemRegistry reg;
  reg.add(ccs_as_opsem(parse_ccs_file(read_fixture("pi.ccs"))));
  reg.add(chor_as_opsem({}));
  return reg;
}

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline FormulaPtr gen_formula(Rng& rng, std::size_t depth);

inline ProgramPtr gen_program(Rng& rng, std::size_t depth) {
  static const std::vector<std::string> labels{"a", "b", "c"};
  if (depth == 0) {
    switch (pick(rng, 4)) {
      case 0: return p_term();
      case 1: return p_stuck();
      default: return p_inst(labels[pick(rng, labels.size())]);
    }
  }
  switch (pick(rng, 6)) {
    case 0: return p_inst(labels[pick(rng, labels.size())]);
    case 1: return p_test(gen_formula(rng, depth > 1 ? 1 : 0));
    case 2: return p_seq(gen_program(rng, depth - 1), gen_program(rng, depth - 1));
    case 3: return p_choice(gen_program(rng, depth - 1), gen_program(rng, depth - 1));
    case 4: return p_star(gen_program(rng, depth - 1));
    default: return gen_program(rng, 0);
  }
}

inline FormulaPtr gen_formula(Rng& rng, std::size_t depth) {
  static const std::vector<std::string> atoms{"p", "q", "r"};
  if (depth == 0) {
    switch (pick(rng, 4)) {
      case 0: return f_top();
      case 1: return f_bot();
      case 2: return f_pos(atoms[pick(rng, atoms.size())]);
      default: return f_neg(atoms[pick(rng, atoms.size())]);
    }
  }
  switch (pick(rng, 5)) {
    case 0: return f_or(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1));
    case 1: return f_and(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1));
    case 2: return f_box(gen_program(rng, depth - 1), gen_formula(rng, depth - 1));
    case 3: return f_dia(gen_program(rng, depth - 1), gen_formula(rng, depth - 1));
    default: return gen_formula(rng, 0);
  }
}

// Guarded, tau-free CCS process over actions a..d and the given definition
// names (each use is guarded because it only appears under a prefix).
inline CcsPtr gen_ccs(Rng& rng, std::size_t depth,
                      const std::vector<std::string>& names = {}) {
  static const std::vector<std::string> acts{"a", "b", "c", "d"};
  if (depth == 0) return ccs_nil();
  switch (pick(rng, 5)) {
    case 0: return ccs_nil();
    case 1:
    case 2: {
      CcsPtr cont = (!names.empty() && pick(rng, 4) == 0)
                        ? ccs_name(names[pick(rng, names.size())])
                        : gen_ccs(rng, depth - 1, names);
      return ccs_prefix({CcsActKind::Act, acts[pick(rng, acts.size())]}, cont);
    }
    default:
      return ccs_sum(gen_ccs(rng, depth - 1, names), gen_ccs(rng, depth - 1, names));
  }
}

inline ChorInstr gen_instr(Rng& rng, const std::vector<std::string>& pids) {
  std::string p = pids[pick(rng, pids.size())];
  std::string q = pids[pick(rng, pids.size())];
  while (q == p) q = pids[pick(rng, pids.size())];
  switch (pick(rng, 3)) {
    case 0: return chor_assign(p, "x", "1");
    case 1: return chor_com(p, "x", q, "y");
    default: return chor_sel(p, q, "l");
  }
}

inline ChorPtr gen_chor(Rng& rng, std::size_t depth,
                        const std::vector<std::string>& pids) {
  if (depth == 0) return chor_nil();
  switch (pick(rng, 4)) {
    case 0: return chor_nil();
    case 3: {
      std::string p = pids[pick(rng, pids.size())];
      return chor_cond(p, "b", gen_chor(rng, depth - 1, pids),
                       gen_chor(rng, depth - 1, pids), chor_nil());
    }
    default:
      return chor_seqi(gen_instr(rng, pids), gen_chor(rng, depth - 1, pids));
  }
}

// Random frames share this shape across the suite.
inline KripkeFrame gen_frame(std::uint64_t seed, std::size_t max_worlds = 6) {
  Rng rng(seed);
  std::size_t n = 1 + pick(rng, max_worlds);
  return random_frame(seed * 2654435761u + 1, n, {"p", "q", "r"},
                      {"a", "b", "c"}, 0.5);
}

}  // namespace opdl::testing
