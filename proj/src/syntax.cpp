#include "opdl/syntax.hpp"

#include <stdexcept>

#include "opdl/opsem.hpp"

namespace opdl {

namespace {

ProgramPtr mk_prog(Program p) { return std::make_shared<const Program>(std::move(p)); }
FormulaPtr mk_form(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

int cmp3(int a, int b) { return a < b ? -1 : (a > b ? 1 : 0); }

}  // namespace

ProgramPtr p_term() {
  static const ProgramPtr v = mk_prog({ProgKind::Terminated, {}, {}, {}, {}, {}});
  return v;
}
ProgramPtr p_stuck() {
  static const ProgramPtr v = mk_prog({ProgKind::Stuck, {}, {}, {}, {}, {}});
  return v;
}
ProgramPtr p_inst(const std::string& label) {
  if (label == "eps") return p_term();  // the silent label is the terminated program
  return mk_prog({ProgKind::Inst, label, {}, {}, {}, {}});
}
ProgramPtr p_test(FormulaPtr f) {
  return mk_prog({ProgKind::Test, {}, {}, std::move(f), {}, {}});
}
ProgramPtr p_seq(ProgramPtr a, ProgramPtr b) {
  return mk_prog({ProgKind::Seq, {}, {}, {}, std::move(a), std::move(b)});
}
ProgramPtr p_choice(ProgramPtr a, ProgramPtr b) {
  return mk_prog({ProgKind::Choice, {}, {}, {}, std::move(a), std::move(b)});
}
ProgramPtr p_star(ProgramPtr a) {
  return mk_prog({ProgKind::Star, {}, {}, {}, std::move(a), {}});
}
ProgramPtr p_foreign(const std::string& sem_id, const std::string& term) {
  return mk_prog({ProgKind::Foreign, sem_id, term, {}, {}, {}});
}

FormulaPtr f_top() {
  static const FormulaPtr v = mk_form({FKind::Top, {}, {}, {}, {}});
  return v;
}
FormulaPtr f_bot() {
  static const FormulaPtr v = mk_form({FKind::Bot, {}, {}, {}, {}});
  return v;
}
FormulaPtr f_pos(const std::string& atom) { return mk_form({FKind::Pos, atom, {}, {}, {}}); }
FormulaPtr f_neg(const std::string& atom) { return mk_form({FKind::Neg, atom, {}, {}, {}}); }
FormulaPtr f_or(FormulaPtr a, FormulaPtr b) {
  return mk_form({FKind::Or, {}, {}, std::move(a), std::move(b)});
}
FormulaPtr f_and(FormulaPtr a, FormulaPtr b) {
  return mk_form({FKind::And, {}, {}, std::move(a), std::move(b)});
}
FormulaPtr f_box(ProgramPtr p, FormulaPtr f) {
  return mk_form({FKind::Box, {}, std::move(p), std::move(f), {}});
}
FormulaPtr f_dia(ProgramPtr p, FormulaPtr f) {
  return mk_form({FKind::Dia, {}, std::move(p), std::move(f), {}});
}

int compare(const ProgramPtr& a, const ProgramPtr& b) {
  if (a == b) return 0;
  if (int c = cmp3(static_cast<int>(a->kind), static_cast<int>(b->kind))) return c;
  switch (a->kind) {
    case ProgKind::Terminated:
    case ProgKind::Stuck:
      return 0;
    case ProgKind::Inst:
      return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
    case ProgKind::Test:
      return compare(a->test, b->test);
    case ProgKind::Seq:
    case ProgKind::Choice:
      if (int c = compare(a->left, b->left)) return c;
      return compare(a->right, b->right);
    case ProgKind::Star:
      return compare(a->left, b->left);
    case ProgKind::Foreign:
      if (int c = a->name.compare(b->name)) return c < 0 ? -1 : 1;
      if (int c = a->term.compare(b->term)) return c < 0 ? -1 : 1;
      return 0;
  }
  return 0;
}

int compare(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return 0;
  if (int c = cmp3(static_cast<int>(a->kind), static_cast<int>(b->kind))) return c;
  switch (a->kind) {
    case FKind::Top:
    case FKind::Bot:
      return 0;
    case FKind::Pos:
    case FKind::Neg: {
      int c = a->atom.compare(b->atom);
      return c < 0 ? -1 : (c == 0 ? 0 : 1);
    }
    case FKind::Or:
    case FKind::And:
      if (int c = compare(a->left, b->left)) return c;
      return compare(a->right, b->right);
    case FKind::Box:
    case FKind::Dia:
      if (int c = compare(a->prog, b->prog)) return c;
      return compare(a->left, b->left);
  }
  return 0;
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) { return compare(a, b) == 0; }
bool equal(const ProgramPtr& a, const ProgramPtr& b) { return compare(a, b) == 0; }

bool sequent_equal(const Sequent& a, const Sequent& b) {
  if (a.size() != b.size()) return false;
  auto it = b.begin();
  for (const auto& f : a) {
    if (!equal(f, *it++)) return false;
  }
  return true;
}

bool contains(const Sequent& s, const FormulaPtr& f) { return s.count(f) > 0; }

Sequent seq_minus(const Sequent& s, const FormulaPtr& f) {
  Sequent out = s;
  out.erase(f);
  return out;
}
Sequent seq_plus(const Sequent& s, const FormulaPtr& f) {
  Sequent out = s;
  out.insert(f);
  return out;
}
Sequent seq_union(const Sequent& a, const Sequent& b) {
  Sequent out = a;
  out.insert(b.begin(), b.end());
  return out;
}
bool is_subset(const Sequent& a, const Sequent& b) {
  for (const auto& f : a)
    if (!b.count(f)) return false;
  return true;
}

FormulaPtr negate(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::Top: return f_bot();
    case FKind::Bot: return f_top();
    case FKind::Pos: return f_neg(f->atom);
    case FKind::Neg: return f_pos(f->atom);
    case FKind::Or: return f_and(negate(f->left), negate(f->right));
    case FKind::And: return f_or(negate(f->left), negate(f->right));
    case FKind::Box: return f_dia(f->prog, negate(f->left));
    case FKind::Dia: return f_box(f->prog, negate(f->left));
  }
  throw std::logic_error("negate: bad formula kind");
}

FormulaPtr mk_implies(const FormulaPtr& f, const FormulaPtr& g) {
  return f_or(negate(f), g);
}
FormulaPtr mk_iff(const FormulaPtr& f, const FormulaPtr& g) {
  return f_and(mk_implies(f, g), mk_implies(g, f));
}

std::size_t formula_size(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::Top:
    case FKind::Bot:
    case FKind::Pos:
    case FKind::Neg:
      return 1;
    case FKind::Or:
    case FKind::And:
      return 1 + formula_size(f->left) + formula_size(f->right);
    case FKind::Box:
    case FKind::Dia:
      return 1 + formula_size(f->left);
  }
  return 1;
}

namespace {

// One application of each closure rule to `f`, pushing results through `add`.
template <typename Add>
void fl_expand(const FormulaPtr& f, const OpSemRegistry& reg, Add&& add) {
  switch (f->kind) {
    case FKind::Top:
    case FKind::Bot:
    case FKind::Pos:
    case FKind::Neg:
      return;
    case FKind::Or:
    case FKind::And:
      add(f->left);
      add(f->right);
      return;
    case FKind::Box:
    case FKind::Dia: {
      const bool box = f->kind == FKind::Box;
      auto wrap = [&](ProgramPtr p, FormulaPtr body) {
        return box ? f_box(std::move(p), std::move(body))
                   : f_dia(std::move(p), std::move(body));
      };
      const ProgramPtr& a = f->prog;
      add(f->left);
      switch (a->kind) {
        case ProgKind::Terminated:
        case ProgKind::Stuck:
        case ProgKind::Inst:
          return;
        case ProgKind::Test:
          add(a->test);
          return;
        case ProgKind::Seq:
          add(wrap(a->left, wrap(a->right, f->left)));
          return;
        case ProgKind::Choice:
          add(wrap(a->left, f->left));
          add(wrap(a->right, f->left));
          return;
        case ProgKind::Star:
          // Both the nested unfolding and the sequential form produced by
          // the star rules, so accepted derivations stay inside the closure.
          add(wrap(a->left, wrap(a, f->left)));
          add(wrap(p_seq(a->left, a), f->left));
          return;
        case ProgKind::Foreign: {
          for (const auto& [label, next] : op_step(a, reg))
            add(wrap(label, wrap(next, f->left)));
          return;
        }
      }
      return;
    }
  }
}

}  // namespace

FlResult fl_closure(const Sequent& gamma, const OpSemRegistry& reg,
                    std::size_t max_size) {
  FlResult res;
  res.closure = gamma;
  std::vector<FormulaPtr> frontier(gamma.begin(), gamma.end());
  while (!frontier.empty()) {
    FormulaPtr f = frontier.back();
    frontier.pop_back();
    bool over = false;
    fl_expand(f, reg, [&](const FormulaPtr& g) {
      if (over) return;
      if (res.closure.insert(g).second) {
        if (res.closure.size() > max_size) {
          over = true;
          return;
        }
        frontier.push_back(g);
      }
    });
    if (over) {
      res.budget_exceeded = true;
      res.closure.clear();
      return res;
    }
  }
  return res;
}

}  // namespace opdl
