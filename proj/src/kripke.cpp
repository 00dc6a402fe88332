#include "opdl/kripke.hpp"

#include <random>
#include <set>

namespace opdl {

WorldSet ws_full(std::size_t n) { return WorldSet(n, true); }
WorldSet ws_empty(std::size_t n) { return WorldSet(n, false); }

bool ws_is_full(const WorldSet& w) {
  for (bool b : w)
    if (!b) return false;
  return true;
}

AccRel rel_identity(std::size_t n) {
  AccRel r(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) r[i][i] = true;
  return r;
}
AccRel rel_empty(std::size_t n) { return AccRel(n, std::vector<bool>(n, false)); }

AccRel rel_compose(const AccRel& a, const AccRel& b) {
  std::size_t n = a.size();
  AccRel r = rel_empty(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!a[i][j]) continue;
      for (std::size_t k = 0; k < n; ++k)
        if (b[j][k]) r[i][k] = true;
    }
  return r;
}

AccRel rel_union(const AccRel& a, const AccRel& b) {
  AccRel r = a;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      if (b[i][j]) r[i][j] = true;
  return r;
}

bool rel_equal(const AccRel& a, const AccRel& b) { return a == b; }

namespace {

struct Evaluator {
  const KripkeFrame& frame;
  const OpSemRegistry& reg;
  std::size_t state_budget;
  EvalError* err;
  bool failed = false;

  void fail(const std::string& reason) {
    if (!failed && err) err->reason = reason;
    failed = true;
  }

  std::size_t n() const { return frame.worlds; }

  WorldSet formula(const FormulaPtr& f) {
    if (failed) return ws_empty(n());
    switch (f->kind) {
      case FKind::Top: return ws_full(n());
      case FKind::Bot: return ws_empty(n());
      case FKind::Pos: {
        auto it = frame.atoms.find(f->atom);
        return it == frame.atoms.end() ? ws_empty(n()) : it->second;
      }
      case FKind::Neg: {
        auto it = frame.atoms.find(f->atom);
        WorldSet w = ws_full(n());
        if (it != frame.atoms.end())
          for (std::size_t i = 0; i < n(); ++i)
            if (it->second[i]) w[i] = false;
        return w;
      }
      case FKind::Or: {
        WorldSet a = formula(f->left), b = formula(f->right);
        for (std::size_t i = 0; i < n(); ++i)
          if (b[i]) a[i] = true;
        return a;
      }
      case FKind::And: {
        WorldSet a = formula(f->left), b = formula(f->right);
        for (std::size_t i = 0; i < n(); ++i)
          if (!b[i]) a[i] = false;
        return a;
      }
      case FKind::Box:
      case FKind::Dia: {
        AccRel r = program(f->prog);
        WorldSet body = formula(f->left);
        WorldSet out(n(), f->kind == FKind::Box);
        for (std::size_t i = 0; i < n(); ++i)
          for (std::size_t j = 0; j < n(); ++j) {
            if (!r[i][j]) continue;
            if (f->kind == FKind::Box) {
              if (!body[j]) out[i] = false;
            } else {
              if (body[j]) out[i] = true;
            }
          }
        return out;
      }
    }
    return ws_empty(n());
  }

  AccRel program(const ProgramPtr& p) {
    if (failed) return rel_empty(n());
    switch (p->kind) {
      case ProgKind::Terminated:
        return rel_identity(n());
      case ProgKind::Stuck:
        return rel_empty(n());
      case ProgKind::Inst: {
        auto it = frame.labels.find(p->name);
        return it == frame.labels.end() ? rel_empty(n()) : it->second;
      }
      case ProgKind::Test: {
        WorldSet w = formula(p->test);
        AccRel r = rel_empty(n());
        for (std::size_t i = 0; i < n(); ++i)
          if (w[i]) r[i][i] = true;
        return r;
      }
      case ProgKind::Seq:
        return rel_compose(program(p->left), program(p->right));
      case ProgKind::Choice:
        return rel_union(program(p->left), program(p->right));
      case ProgKind::Star: {
        AccRel step = program(p->left);
        AccRel acc = rel_identity(n());
        for (;;) {
          AccRel next = rel_union(acc, rel_compose(acc, step));
          if (rel_equal(next, acc)) return acc;
          acc = std::move(next);
        }
      }
      case ProgKind::Foreign:
        return foreign(p);
    }
    return rel_empty(n());
  }

  // Least solution of X_P = union over P -> beta gamma of [[beta]] . X_gamma
  // over the reachable program set, with X_epsilon the identity.
  AccRel foreign(const ProgramPtr& p) {
    struct Less {
      bool operator()(const ProgramPtr& a, const ProgramPtr& b) const {
        return compare(a, b) < 0;
      }
    };
    std::map<ProgramPtr, std::vector<Transition>, Less> steps;
    std::vector<ProgramPtr> order;
    std::vector<ProgramPtr> frontier{p};
    steps.emplace(p, std::vector<Transition>{});
    while (!frontier.empty()) {
      ProgramPtr s = frontier.back();
      frontier.pop_back();
      order.push_back(s);
      auto ts = op_step(s, reg);
      for (auto& [label, next] : ts) {
        if (next->kind == ProgKind::Terminated) continue;
        if (steps.emplace(next, std::vector<Transition>{}).second) {
          if (steps.size() > state_budget) {
            fail("foreign-program state budget exhausted");
            return rel_empty(n());
          }
          frontier.push_back(next);
        }
      }
      steps[s] = std::move(ts);
    }
    std::map<ProgramPtr, AccRel, Less> sol;
    for (const auto& s : order) sol.emplace(s, rel_empty(n()));
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& s : order) {
        AccRel acc = rel_empty(n());
        for (const auto& [label, next] : steps[s]) {
          AccRel tail = next->kind == ProgKind::Terminated ? rel_identity(n())
                                                           : sol[next];
          acc = rel_union(acc, rel_compose(program(label), tail));
        }
        if (!rel_equal(acc, sol[s])) {
          sol[s] = std::move(acc);
          changed = true;
        }
      }
    }
    return sol[p];
  }
};

}  // namespace

std::optional<WorldSet> eval_formula(const KripkeFrame& frame, const FormulaPtr& f,
                                     const OpSemRegistry& reg,
                                     std::size_t state_budget, EvalError* err) {
  Evaluator ev{frame, reg, state_budget, err};
  WorldSet w = ev.formula(f);
  if (ev.failed) return std::nullopt;
  return w;
}

std::optional<AccRel> eval_program(const KripkeFrame& frame, const ProgramPtr& p,
                                   const OpSemRegistry& reg,
                                   std::size_t state_budget, EvalError* err) {
  Evaluator ev{frame, reg, state_budget, err};
  AccRel r = ev.program(p);
  if (ev.failed) return std::nullopt;
  return r;
}

std::optional<bool> is_valid(const KripkeFrame& frame, const FormulaPtr& f,
                             const OpSemRegistry& reg, std::size_t state_budget,
                             EvalError* err) {
  auto w = eval_formula(frame, f, reg, state_budget, err);
  if (!w) return std::nullopt;
  return ws_is_full(*w);
}

std::optional<bool> is_valid(const KripkeFrame& frame, const Sequent& s,
                             const OpSemRegistry& reg, std::size_t state_budget,
                             EvalError* err) {
  WorldSet acc = ws_empty(frame.worlds);
  for (const auto& f : s) {
    auto w = eval_formula(frame, f, reg, state_budget, err);
    if (!w) return std::nullopt;
    for (std::size_t i = 0; i < frame.worlds; ++i)
      if ((*w)[i]) acc[i] = true;
  }
  return ws_is_full(acc);
}

KripkeFrame random_frame(std::uint64_t seed, std::size_t n_worlds,
                         const std::vector<std::string>& atoms,
                         const std::vector<std::string>& labels, double density) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  KripkeFrame frame;
  frame.worlds = n_worlds;
  for (const auto& a : atoms) {
    WorldSet w = ws_empty(n_worlds);
    for (std::size_t i = 0; i < n_worlds; ++i) w[i] = coin(rng) < density;
    frame.atoms.emplace(a, std::move(w));
  }
  for (const auto& l : labels) {
    AccRel r = rel_empty(n_worlds);
    for (std::size_t i = 0; i < n_worlds; ++i)
      for (std::size_t j = 0; j < n_worlds; ++j) r[i][j] = coin(rng) < density;
    frame.labels.emplace(l, std::move(r));
  }
  return frame;
}

namespace {

void collect_symbols(const FormulaPtr& f, std::set<std::string>& atoms,
                     std::set<std::string>& labels);

void collect_symbols(const ProgramPtr& p, std::set<std::string>& atoms,
                     std::set<std::string>& labels) {
  switch (p->kind) {
    case ProgKind::Terminated:
    case ProgKind::Stuck:
    case ProgKind::Foreign:  // its labels surface through evaluation defaults
      return;
    case ProgKind::Inst:
      labels.insert(p->name);
      return;
    case ProgKind::Test:
      collect_symbols(p->test, atoms, labels);
      return;
    case ProgKind::Seq:
    case ProgKind::Choice:
      collect_symbols(p->left, atoms, labels);
      collect_symbols(p->right, atoms, labels);
      return;
    case ProgKind::Star:
      collect_symbols(p->left, atoms, labels);
      return;
  }
}

void collect_symbols(const FormulaPtr& f, std::set<std::string>& atoms,
                     std::set<std::string>& labels) {
  switch (f->kind) {
    case FKind::Top:
    case FKind::Bot:
      return;
    case FKind::Pos:
    case FKind::Neg:
      atoms.insert(f->atom);
      return;
    case FKind::Or:
    case FKind::And:
      collect_symbols(f->left, atoms, labels);
      collect_symbols(f->right, atoms, labels);
      return;
    case FKind::Box:
    case FKind::Dia:
      collect_symbols(f->prog, atoms, labels);
      collect_symbols(f->left, atoms, labels);
      return;
  }
}

}  // namespace

std::optional<Countermodel> find_countermodel(const FormulaPtr& f,
                                              const OpSemRegistry& reg,
                                              std::size_t max_worlds,
                                              std::size_t samples,
                                              std::uint64_t seed,
                                              std::size_t state_budget) {
  std::set<std::string> atom_set, label_set;
  collect_symbols(f, atom_set, label_set);
  std::vector<std::string> atoms(atom_set.begin(), atom_set.end());
  std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::mt19937_64 rng(seed);
  std::vector<double> densities{0.0, 1.0, 0.5, 0.25, 0.75};
  for (std::size_t n = 1; n <= max_worlds; ++n) {
    for (std::size_t s = 0; s < samples; ++s) {
      double density = densities[s % densities.size()];
      KripkeFrame frame = random_frame(rng(), n, atoms, labels, density);
      auto w = eval_formula(frame, f, reg, state_budget);
      if (!w) continue;
      for (std::size_t i = 0; i < n; ++i)
        if (!(*w)[i]) return Countermodel{std::move(frame), i};
    }
  }
  return std::nullopt;
}

}  // namespace opdl
