#include "opdl/chor.hpp"

#include <algorithm>
#include <stdexcept>

#include "opdl/frontend.hpp"

namespace opdl {

ChorInstr chor_assign(std::string p, std::string var, std::string expr) {
  return {ChorInstrKind::Assign, std::move(p), {}, std::move(var), std::move(expr), {}};
}
ChorInstr chor_com(std::string p, std::string expr, std::string q, std::string var) {
  return {ChorInstrKind::Com, std::move(p), std::move(q), std::move(var),
          std::move(expr), {}};
}
ChorInstr chor_sel(std::string p, std::string q, std::string lbl) {
  return {ChorInstrKind::Sel, std::move(p), std::move(q), {}, std::move(lbl), {}};
}
ChorInstr chor_cont(std::string name, std::string p) {
  return {ChorInstrKind::Cont, std::move(p), {}, {}, {}, std::move(name)};
}
ChorInstr chor_test(std::string p, std::string cond, bool positive) {
  return {positive ? ChorInstrKind::TestPos : ChorInstrKind::TestNeg,
          std::move(p), {}, {}, std::move(cond), {}};
}

int compare(const ChorInstr& a, const ChorInstr& b) {
  auto key = [](const ChorInstr& i) {
    return std::tie(i.kind, i.p, i.q, i.var, i.expr, i.name);
  };
  auto ka = key(a), kb = key(b);
  return ka < kb ? -1 : (ka == kb ? 0 : 1);
}

std::string render_instr(const ChorInstr& i) {
  switch (i.kind) {
    case ChorInstrKind::Assign: return i.p + "." + i.var + " := " + i.expr;
    case ChorInstrKind::Com: return i.p + "." + i.expr + " -> " + i.q + "." + i.var;
    case ChorInstrKind::Sel: return i.p + " -> " + i.q + "[" + i.expr + "]";
    case ChorInstrKind::Cont: return i.name + "#" + i.p;
    case ChorInstrKind::TestPos: return "?" + i.p + "." + i.expr;
    case ChorInstrKind::TestNeg: return "?!" + i.p + "." + i.expr;
  }
  return {};
}

namespace {
ChorPtr mk(Choreography c) { return std::make_shared<const Choreography>(std::move(c)); }
}  // namespace

ChorPtr chor_nil() {
  static const ChorPtr v = mk({ChorKind::Nil, {}, {}, {}, {}, {}, {}, {}});
  return v;
}
ChorPtr chor_seqi(ChorInstr i, ChorPtr c) {
  return mk({ChorKind::SeqI, std::move(i), {}, {}, std::move(c), {}, {}, {}});
}
ChorPtr chor_cond(std::string p, std::string cond, ChorPtr then_c, ChorPtr else_c,
                  ChorPtr cont) {
  return mk({ChorKind::Cond, {}, std::move(p), std::move(cond), std::move(then_c),
             std::move(else_c), std::move(cont), {}});
}
ChorPtr chor_call(const std::string& name) {
  return mk({ChorKind::Call, {}, {}, {}, {}, {}, {}, name});
}

int compare(const ChorPtr& a, const ChorPtr& b) {
  if (a == b) return 0;
  if (a->kind != b->kind)
    return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  switch (a->kind) {
    case ChorKind::Nil:
      return 0;
    case ChorKind::SeqI:
      if (int c = compare(a->instr, b->instr)) return c;
      return compare(a->left, b->left);
    case ChorKind::Cond: {
      if (int c = a->p.compare(b->p)) return c < 0 ? -1 : 1;
      if (int c = a->cond.compare(b->cond)) return c < 0 ? -1 : 1;
      if (int c = compare(a->left, b->left)) return c;
      if (int c = compare(a->right, b->right)) return c;
      return compare(a->cont, b->cont);
    }
    case ChorKind::Call: {
      int c = a->name.compare(b->name);
      return c < 0 ? -1 : (c == 0 ? 0 : 1);
    }
  }
  return 0;
}

std::set<std::string> pn(const ChorInstr& i) {
  switch (i.kind) {
    case ChorInstrKind::Assign:
    case ChorInstrKind::Cont:
    case ChorInstrKind::TestPos:
    case ChorInstrKind::TestNeg:
      return {i.p};
    case ChorInstrKind::Com:
    case ChorInstrKind::Sel:
      return {i.p, i.q};
  }
  return {};
}

namespace {

std::set<std::string> pn_rec(const ChorPtr& c, const ChorDefs& defs,
                             std::set<std::string>& visiting) {
  switch (c->kind) {
    case ChorKind::Nil:
      return {};
    case ChorKind::SeqI: {
      auto out = pn(c->instr);
      auto rest = pn_rec(c->left, defs, visiting);
      out.insert(rest.begin(), rest.end());
      return out;
    }
    case ChorKind::Cond: {
      std::set<std::string> out{c->p};
      for (const ChorPtr& part : {c->left, c->right, c->cont}) {
        auto s = pn_rec(part, defs, visiting);
        out.insert(s.begin(), s.end());
      }
      return out;
    }
    case ChorKind::Call: {
      if (!visiting.insert(c->name).second) return {};
      auto it = defs.find(c->name);
      if (it == defs.end())
        throw std::invalid_argument("unbound choreography name: " + c->name);
      auto out = pn_rec(it->second, defs, visiting);
      visiting.erase(c->name);
      return out;
    }
  }
  return {};
}

}  // namespace

std::set<std::string> pn(const ChorPtr& c, const ChorDefs& defs) {
  std::set<std::string> visiting;
  return pn_rec(c, defs, visiting);
}

ChorPtr chor_seq(const ChorPtr& c, const ChorPtr& k) {
  if (k->kind == ChorKind::Nil) return c;
  switch (c->kind) {
    case ChorKind::Nil:
      return k;
    case ChorKind::SeqI:
      return chor_seqi(c->instr, chor_seq(c->left, k));
    case ChorKind::Cond:
      return chor_cond(c->p, c->cond, c->left, c->right, chor_seq(c->cont, k));
    case ChorKind::Call:
      throw std::invalid_argument(
          "cannot sequence after a call (tail recursion only): " + c->name);
  }
  return c;
}

std::vector<std::pair<ChorInstr, ChorPtr>> chor_step(const ChorPtr& c,
                                                     const ChorDefs& defs) {
  std::vector<std::pair<ChorInstr, ChorPtr>> out;
  switch (c->kind) {
    case ChorKind::Nil:
      break;
    case ChorKind::SeqI: {
      out.push_back({c->instr, c->left});
      auto blocked = pn(c->instr);
      for (auto& [mu, c2] : chor_step(c->left, defs)) {
        auto pm = pn(mu);
        bool disjoint = std::none_of(pm.begin(), pm.end(),
                                     [&](const std::string& x) { return blocked.count(x); });
        if (disjoint) out.push_back({mu, chor_seqi(c->instr, c2)});
      }
      break;
    }
    case ChorKind::Cond: {
      out.push_back({chor_test(c->p, c->cond, true), chor_seq(c->left, c->cont)});
      out.push_back({chor_test(c->p, c->cond, false), chor_seq(c->right, c->cont)});
      auto then_steps = chor_step(c->left, defs);
      auto else_steps = chor_step(c->right, defs);
      for (auto& [mu, t2] : then_steps) {
        if (pn(mu).count(c->p)) continue;
        for (auto& [nu, e2] : else_steps)
          if (compare(mu, nu) == 0)
            out.push_back({mu, chor_cond(c->p, c->cond, t2, e2, c->cont)});
      }
      break;
    }
    case ChorKind::Call: {
      auto it = defs.find(c->name);
      if (it == defs.end())
        throw std::invalid_argument("unbound choreography name: " + c->name);
      auto procs = pn(c, defs);
      for (const std::string& q : procs) {
        ChorPtr next = it->second;
        // Remaining processes join later through their continuation markers.
        for (auto r = procs.rbegin(); r != procs.rend(); ++r)
          if (*r != q) next = chor_seqi(chor_cont(c->name, *r), next);
        out.push_back({chor_cont(c->name, q), next});
      }
      break;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (int c2 = compare(x.first, y.first)) return c2 < 0;
    return compare(x.second, y.second) < 0;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& x, const auto& y) {
                          return compare(x.first, y.first) == 0 &&
                                 compare(x.second, y.second) == 0;
                        }),
            out.end());
  return out;
}

namespace {

class ChorOpSem final : public OpSemContract {
 public:
  explicit ChorOpSem(ChorDefs defs) : defs_(std::move(defs)) {
    for (const auto& [name, body] : defs_) {
      if (pn(body, defs_).empty())
        throw std::invalid_argument("choreography definition with empty pn: " + name);
    }
  }

  std::string id() const override { return "chor"; }

  std::string canon(const std::string& state) const override {
    return render_chor(parse_chor_term_strict(state));
  }

  std::vector<std::pair<ProgramPtr, std::string>> step(
      const std::string& state) const override {
    std::vector<std::pair<ProgramPtr, std::string>> out;
    for (auto& [i, c2] : chor_step(parse_chor_term_strict(state), defs_)) {
      ProgramPtr label;
      if (i.kind == ChorInstrKind::TestPos)
        label = p_test(f_pos(i.p + "." + i.expr));
      else if (i.kind == ChorInstrKind::TestNeg)
        label = p_test(f_neg(i.p + "." + i.expr));
      else
        label = p_inst(render_instr(i));
      out.push_back({std::move(label), render_chor(c2)});
    }
    return out;
  }

  bool is_epsilon_state(const std::string& state) const override {
    return parse_chor_term_strict(state)->kind == ChorKind::Nil;
  }

 private:
  ChorDefs defs_;
};

}  // namespace

std::shared_ptr<const OpSemContract> chor_as_opsem(ChorDefs defs) {
  return std::make_shared<ChorOpSem>(std::move(defs));
}

}  // namespace opdl
