#include "opdl/opsem.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <tuple>

namespace opdl {

namespace {

struct ProgramLess {
  bool operator()(const ProgramPtr& a, const ProgramPtr& b) const {
    return compare(a, b) < 0;
  }
};

constexpr std::size_t kDeterminizeCap = 1u << 16;

}  // namespace

void OpSemRegistry::add(std::shared_ptr<const OpSemContract> contract) {
  auto id = contract->id();
  if (contracts_.count(id))
    throw std::invalid_argument("duplicate semantics id: " + id);
  contracts_.emplace(std::move(id), std::move(contract));
}

const OpSemContract* OpSemRegistry::find(const std::string& id) const {
  auto it = contracts_.find(id);
  return it == contracts_.end() ? nullptr : it->second.get();
}

std::vector<std::string> OpSemRegistry::ids() const {
  std::vector<std::string> out{"kleene"};
  for (const auto& [id, _] : contracts_) out.push_back(id);
  return out;
}

namespace {

const OpSemContract& resolve(const std::string& id, const OpSemRegistry& reg) {
  const OpSemContract* c = reg.find(id);
  if (!c) throw std::invalid_argument("unregistered semantics id: " + id);
  return *c;
}

ProgramPtr wrap_state(const std::string& sem_id, const std::string& state,
                      const OpSemContract& c) {
  return c.is_epsilon_state(state) ? p_term() : p_foreign(sem_id, state);
}

std::vector<Transition> foreign_step(const ProgramPtr& p, const OpSemRegistry& reg) {
  const OpSemContract& c = resolve(p->name, reg);
  std::vector<Transition> out;
  for (auto& [label, next] : c.step(p->term))
    out.emplace_back(label, wrap_state(p->name, next, c));
  return out;
}

}  // namespace

ProgramPtr make_foreign(const std::string& sem_id, const std::string& term,
                        const OpSemRegistry& reg) {
  const OpSemContract& c = resolve(sem_id, reg);
  std::string canon = c.canon(term);
  return wrap_state(sem_id, canon, c);
}

std::vector<Transition> kleene_step(const ProgramPtr& p, const OpSemRegistry& reg) {
  switch (p->kind) {
    case ProgKind::Terminated:
    case ProgKind::Stuck:
      return {};
    case ProgKind::Inst:
    case ProgKind::Test:
      return {{p, p_term()}};
    case ProgKind::Seq: {
      const ProgramPtr& head = p->left;
      if (head->kind == ProgKind::Inst || head->kind == ProgKind::Test)
        return {{head, p->right}};
      if (head->kind == ProgKind::Foreign) {
        std::vector<Transition> out;
        for (auto& [label, next] : foreign_step(head, reg)) {
          out.emplace_back(label, next->kind == ProgKind::Terminated
                                      ? p->right
                                      : p_seq(next, p->right));
        }
        return out;
      }
      return {};  // no rule for other compound heads
    }
    case ProgKind::Choice:
      return {{p_term(), p->left}, {p_term(), p->right}};
    case ProgKind::Star:
      return {{p_term(), p_term()}, {p_term(), p_seq(p->left, p)}};
    case ProgKind::Foreign:
      return foreign_step(p, reg);
  }
  return {};
}

std::vector<Transition> op_step(const ProgramPtr& p, const OpSemRegistry& reg) {
  std::vector<Transition> out = kleene_step(p, reg);
  std::sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) {
    if (int c = compare(a.first, b.first)) return c < 0;
    return compare(a.second, b.second) < 0;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Transition& a, const Transition& b) {
                          return equal(a.first, b.first) && equal(a.second, b.second);
                        }),
            out.end());
  return out;
}

Lts explore(const ProgramPtr& start, const OpSemRegistry& reg,
            std::size_t max_states) {
  Lts lts;
  std::map<ProgramPtr, std::size_t, ProgramLess> index;
  std::deque<std::size_t> frontier;
  auto intern = [&](const ProgramPtr& s) -> std::ptrdiff_t {
    auto it = index.find(s);
    if (it != index.end()) return static_cast<std::ptrdiff_t>(it->second);
    if (lts.states.size() >= max_states) {
      lts.truncated = true;
      return -1;
    }
    std::size_t id = lts.states.size();
    lts.states.push_back(s);
    index.emplace(s, id);
    frontier.push_back(id);
    return static_cast<std::ptrdiff_t>(id);
  };
  intern(start);
  while (!frontier.empty()) {
    std::size_t id = frontier.front();
    frontier.pop_front();
    for (auto& [label, next] : op_step(lts.states[id], reg)) {
      std::ptrdiff_t to = intern(next);
      if (to >= 0) lts.edges.emplace_back(id, label, static_cast<std::size_t>(to));
    }
  }
  return lts;
}

std::string render_trace(const Trace& t) {
  if (t.empty()) return "<empty>";
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ".";
    out += render(t[i]);
  }
  return out;
}

namespace {

// Epsilon-free view of an explored LTS: per-state outgoing (label id, target),
// labels interned by rendering, every state accepting.
struct Nfa {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  std::vector<std::vector<std::size_t>> eps;  // silent successors
  bool truncated = false;
};

struct LabelTable {
  std::map<std::string, std::size_t> ids;
  std::vector<ProgramPtr> labels;
  std::size_t intern(const ProgramPtr& l) {
    std::string key = render(l);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    std::size_t id = labels.size();
    labels.push_back(l);
    ids.emplace(std::move(key), id);
    return id;
  }
};

Nfa build_nfa(const Lts& lts, LabelTable& table) {
  Nfa nfa;
  nfa.truncated = lts.truncated;
  nfa.out.resize(lts.states.size());
  nfa.eps.resize(lts.states.size());
  for (const auto& [from, label, to] : lts.edges) {
    if (label->kind == ProgKind::Terminated)
      nfa.eps[from].push_back(to);
    else
      nfa.out[from].push_back({table.intern(label), to});
  }
  return nfa;
}

using StateSet = std::set<std::size_t>;

StateSet eps_close(const Nfa& nfa, StateSet s) {
  std::vector<std::size_t> stack(s.begin(), s.end());
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : nfa.eps[v])
      if (s.insert(w).second) stack.push_back(w);
  }
  return s;
}

StateSet move_label(const Nfa& nfa, const StateSet& s, std::size_t label) {
  StateSet out;
  for (std::size_t v : s)
    for (auto& [l, w] : nfa.out[v])
      if (l == label) out.insert(w);
  return eps_close(nfa, out);
}

std::vector<std::size_t> enabled_labels(const Nfa& nfa, const StateSet& s) {
  std::set<std::size_t> out;
  for (std::size_t v : s)
    for (auto& [l, w] : nfa.out[v]) out.insert(l);
  return {out.begin(), out.end()};
}

// Lazily determinized subset automaton with interned subset states.
struct Dfa {
  const Nfa* nfa = nullptr;
  std::map<StateSet, std::size_t> ids;
  std::vector<StateSet> sets;
  std::size_t intern(StateSet s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    std::size_t id = sets.size();
    sets.push_back(s);
    ids.emplace(std::move(s), id);
    return id;
  }
  bool over_cap() const { return sets.size() > kDeterminizeCap; }
  std::size_t step(std::size_t id, std::size_t label) {
    return intern(move_label(*nfa, sets[id], label));
  }
  bool accepting(std::size_t id) const { return !sets[id].empty(); }
};

struct UnionFind {
  std::vector<std::size_t> parent;
  std::size_t find(std::size_t x) {
    while (parent.size() <= x) parent.push_back(parent.size());
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

TraceVerdict trace_equiv(const ProgramPtr& p, const ProgramPtr& q,
                         const OpSemRegistry& reg, std::size_t max_states) {
  Lts lp = explore(p, reg, max_states);
  Lts lq = explore(q, reg, max_states);
  if (lp.truncated || lq.truncated)
    return {TraceVerdictKind::Inconclusive, {}, 0, "state budget exhausted"};
  LabelTable table;
  Nfa np = build_nfa(lp, table);
  Nfa nq = build_nfa(lq, table);
  Dfa dp, dq;
  dp.nfa = &np;
  dq.nfa = &nq;
  std::size_t p0 = dp.intern(eps_close(np, {lp.initial}));
  std::size_t q0 = dq.intern(eps_close(nq, {lq.initial}));
  // Hopcroft-Karp congruence search over pairs of subset states; BFS order
  // makes the first mismatch a shortest separating word.
  UnionFind uf;  // even ids: p-side subsets; odd ids: q-side subsets
  std::deque<std::tuple<std::size_t, std::size_t, Trace>> queue;
  queue.push_back({p0, q0, {}});
  uf.unite(2 * p0, 2 * q0 + 1);
  while (!queue.empty()) {
    auto [a, b, word] = queue.front();
    queue.pop_front();
    if (dp.accepting(a) != dq.accepting(b))
      return {TraceVerdictKind::Distinguished, word, dp.accepting(a) ? 1 : 2, ""};
    std::set<std::size_t> labels;
    for (std::size_t l : enabled_labels(np, dp.sets[a])) labels.insert(l);
    for (std::size_t l : enabled_labels(nq, dq.sets[b])) labels.insert(l);
    for (std::size_t l : labels) {
      std::size_t a2 = dp.step(a, l);
      std::size_t b2 = dq.step(b, l);
      if (dp.over_cap() || dq.over_cap())
        return {TraceVerdictKind::Inconclusive, {}, 0, "determinization cap exceeded"};
      if (uf.unite(2 * a2, 2 * b2 + 1)) {
        Trace next = word;
        next.push_back(table.labels[l]);
        queue.push_back({a2, b2, std::move(next)});
      }
    }
  }
  return {TraceVerdictKind::Equivalent, {}, 0, ""};
}

InclusionVerdict trace_included(const ProgramPtr& p, const ProgramPtr& q,
                                const OpSemRegistry& reg, std::size_t max_states) {
  Lts lp = explore(p, reg, max_states);
  Lts lq = explore(q, reg, max_states);
  if (lp.truncated || lq.truncated)
    return {InclusionKind::Inconclusive, {}, "state budget exhausted"};
  LabelTable table;
  Nfa np = build_nfa(lp, table);
  Nfa nq = build_nfa(lq, table);
  Dfa dp, dq;
  dp.nfa = &np;
  dq.nfa = &nq;
  std::size_t p0 = dp.intern(eps_close(np, {lp.initial}));
  std::size_t q0 = dq.intern(eps_close(nq, {lq.initial}));
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::deque<std::tuple<std::size_t, std::size_t, Trace>> queue;
  queue.push_back({p0, q0, {}});
  seen.insert({p0, q0});
  while (!queue.empty()) {
    auto [a, b, word] = queue.front();
    queue.pop_front();
    if (dq.accepting(b) && !dp.accepting(a))
      return {InclusionKind::Counterexample, word, ""};
    for (std::size_t l : enabled_labels(nq, dq.sets[b])) {
      std::size_t a2 = dp.step(a, l);
      std::size_t b2 = dq.step(b, l);
      if (dp.over_cap() || dq.over_cap())
        return {InclusionKind::Inconclusive, {}, "determinization cap exceeded"};
      if (seen.insert({a2, b2}).second) {
        Trace next = word;
        next.push_back(table.labels[l]);
        queue.push_back({a2, b2, std::move(next)});
      }
    }
  }
  return {InclusionKind::Included, {}, ""};
}

std::vector<Trace> traces_upto(const ProgramPtr& start, const OpSemRegistry& reg,
                               std::size_t n, std::size_t max_states) {
  Lts lts = explore(start, reg, max_states);
  LabelTable table;
  Nfa nfa = build_nfa(lts, table);
  std::set<std::vector<std::size_t>> words;
  std::deque<std::pair<StateSet, std::vector<std::size_t>>> queue;
  queue.push_back({eps_close(nfa, {lts.initial}), {}});
  while (!queue.empty()) {
    auto [s, word] = queue.front();
    queue.pop_front();
    words.insert(word);
    if (word.size() >= n) continue;
    for (std::size_t l : enabled_labels(nfa, s)) {
      StateSet s2 = move_label(nfa, s, l);
      if (s2.empty()) continue;
      auto next = word;
      next.push_back(l);
      queue.push_back({std::move(s2), std::move(next)});
    }
  }
  std::vector<Trace> out;
  for (const auto& w : words) {
    Trace t;
    for (std::size_t l : w) t.push_back(table.labels[l]);
    out.push_back(std::move(t));
  }
  return out;
}

bool trace_accepted(const ProgramPtr& start, const OpSemRegistry& reg,
                    const Trace& t, std::size_t max_states) {
  Lts lts = explore(start, reg, max_states);
  LabelTable table;
  Nfa nfa = build_nfa(lts, table);
  StateSet s = eps_close(nfa, {lts.initial});
  for (const auto& label : t) {
    std::string key = render(label);
    auto it = table.ids.find(key);
    if (it == table.ids.end()) return false;
    s = move_label(nfa, s, it->second);
    if (s.empty()) return false;
  }
  return true;
}

}  // namespace opdl
