#include "opdl/ccs.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "opdl/frontend.hpp"

namespace opdl {

namespace {
CcsPtr mk(CcsProcess p) { return std::make_shared<const CcsProcess>(std::move(p)); }
}  // namespace

CcsAction ccs_co(const CcsAction& a) {
  switch (a.kind) {
    case CcsActKind::Act: return {CcsActKind::CoAct, a.name};
    case CcsActKind::CoAct: return {CcsActKind::Act, a.name};
    case CcsActKind::Tau: return a;
  }
  return a;
}

bool operator==(const CcsAction& a, const CcsAction& b) {
  return a.kind == b.kind && a.name == b.name;
}

std::string render_action(const CcsAction& a) {
  switch (a.kind) {
    case CcsActKind::Act: return a.name;
    case CcsActKind::CoAct: return "'" + a.name;
    case CcsActKind::Tau: return "tau";
  }
  return {};
}

CcsPtr ccs_nil() {
  static const CcsPtr v = mk({CcsKind::Nil, {}, {}, {}, {}});
  return v;
}
CcsPtr ccs_prefix(CcsAction a, CcsPtr p) {
  return mk({CcsKind::Prefix, std::move(a), {}, std::move(p), {}});
}
CcsPtr ccs_par(CcsPtr p, CcsPtr q) {
  return mk({CcsKind::Par, {}, {}, std::move(p), std::move(q)});
}
CcsPtr ccs_sum(CcsPtr p, CcsPtr q) {
  return mk({CcsKind::Sum, {}, {}, std::move(p), std::move(q)});
}
CcsPtr ccs_restrict(const std::string& a, CcsPtr p) {
  return mk({CcsKind::Restrict, {}, a, std::move(p), {}});
}
CcsPtr ccs_name(const std::string& x) { return mk({CcsKind::Name, {}, x, {}, {}}); }

int compare(const CcsPtr& a, const CcsPtr& b) {
  if (a == b) return 0;
  if (a->kind != b->kind)
    return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  switch (a->kind) {
    case CcsKind::Nil:
      return 0;
    case CcsKind::Prefix: {
      if (a->act.kind != b->act.kind)
        return static_cast<int>(a->act.kind) < static_cast<int>(b->act.kind) ? -1 : 1;
      if (int c = a->act.name.compare(b->act.name)) return c < 0 ? -1 : 1;
      return compare(a->left, b->left);
    }
    case CcsKind::Par:
    case CcsKind::Sum:
      if (int c = compare(a->left, b->left)) return c;
      return compare(a->right, b->right);
    case CcsKind::Restrict:
      if (int c = a->name.compare(b->name)) return c < 0 ? -1 : 1;
      return compare(a->left, b->left);
    case CcsKind::Name: {
      int c = a->name.compare(b->name);
      return c < 0 ? -1 : (c == 0 ? 0 : 1);
    }
  }
  return 0;
}

std::vector<std::pair<CcsAction, CcsPtr>> ccs_step(const CcsPtr& p,
                                                   const CcsDefs& defs) {
  std::vector<std::pair<CcsAction, CcsPtr>> out;
  switch (p->kind) {
    case CcsKind::Nil:
      break;
    case CcsKind::Prefix:
      out.push_back({p->act, p->left});
      break;
    case CcsKind::Par: {
      auto ls = ccs_step(p->left, defs);
      auto rs = ccs_step(p->right, defs);
      for (auto& [a, l2] : ls) out.push_back({a, ccs_par(l2, p->right)});
      for (auto& [a, r2] : rs) out.push_back({a, ccs_par(p->left, r2)});
      for (auto& [a, l2] : ls) {
        if (a.kind == CcsActKind::Tau) continue;
        for (auto& [b, r2] : rs)
          if (b == ccs_co(a)) out.push_back({{CcsActKind::Tau, {}}, ccs_par(l2, r2)});
      }
      break;
    }
    case CcsKind::Sum: {
      for (auto& t : ccs_step(p->left, defs)) out.push_back(t);
      for (auto& t : ccs_step(p->right, defs)) out.push_back(t);
      break;
    }
    case CcsKind::Restrict: {
      for (auto& [a, q] : ccs_step(p->left, defs)) {
        if (a.kind != CcsActKind::Tau && a.name == p->name) continue;
        out.push_back({a, ccs_restrict(p->name, q)});
      }
      break;
    }
    case CcsKind::Name: {
      auto it = defs.find(p->name);
      if (it == defs.end())
        throw std::invalid_argument("unbound process name: " + p->name);
      out = ccs_step(it->second, defs);
      break;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    std::string kx = render_action(x.first), ky = render_action(y.first);
    if (int c = kx.compare(ky)) return c < 0;
    return compare(x.second, y.second) < 0;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& x, const auto& y) {
                          return x.first == y.first && compare(x.second, y.second) == 0;
                        }),
            out.end());
  return out;
}

namespace {

// Collects names reachable from `p` without crossing a prefix, expanding
// definitions; records the first violation found.
bool reach_unguarded(const CcsPtr& p, const CcsDefs& defs,
                     std::set<std::string>& open, std::vector<std::string>& path,
                     GuardednessViolation& out) {
  switch (p->kind) {
    case CcsKind::Nil:
    case CcsKind::Prefix:
      return false;
    case CcsKind::Par:
    case CcsKind::Sum: {
      const char* tag = p->kind == CcsKind::Par ? "Par" : "Sum";
      path.push_back(std::string(tag) + "-left");
      if (reach_unguarded(p->left, defs, open, path, out)) return true;
      path.back() = std::string(tag) + "-right";
      if (reach_unguarded(p->right, defs, open, path, out)) return true;
      path.pop_back();
      return false;
    }
    case CcsKind::Restrict:
      path.push_back("Res");
      if (reach_unguarded(p->left, defs, open, path, out)) return true;
      path.pop_back();
      return false;
    case CcsKind::Name: {
      auto it = defs.find(p->name);
      if (it == defs.end())
        throw std::invalid_argument("unbound process name: " + p->name);
      if (!open.insert(p->name).second) {
        out.name = p->name;
        out.path = path;
        return true;
      }
      path.push_back("Name " + p->name);
      if (reach_unguarded(it->second, defs, open, path, out)) return true;
      path.pop_back();
      open.erase(p->name);
      return false;
    }
  }
  return false;
}

}  // namespace

std::optional<GuardednessViolation> check_guarded(const CcsDefs& defs) {
  for (const auto& [name, body] : defs) {
    std::set<std::string> open{name};
    std::vector<std::string> path;
    GuardednessViolation v;
    if (reach_unguarded(body, defs, open, path, v)) return v;
  }
  return std::nullopt;
}

namespace {

class CcsOpSem final : public OpSemContract {
 public:
  explicit CcsOpSem(CcsDefs defs) : defs_(std::move(defs)) {
    if (auto v = check_guarded(defs_))
      throw std::invalid_argument("unguarded process definition: " + v->name);
  }

  std::string id() const override { return "ccs"; }

  std::string canon(const std::string& state) const override {
    return render_ccs(resolve(state));
  }

  std::vector<std::pair<ProgramPtr, std::string>> step(
      const std::string& state) const override {
    std::vector<std::pair<ProgramPtr, std::string>> out;
    for (auto& [a, q] : ccs_step(resolve(state), defs_)) {
      ProgramPtr label =
          a.kind == CcsActKind::Tau
              ? p_term()
              : p_inst(a.kind == CcsActKind::Act ? a.name : a.name + "'");
      out.push_back({std::move(label), render_ccs(q)});
    }
    return out;
  }

  bool is_epsilon_state(const std::string& state) const override {
    return all_nil(resolve(state), defs_.size() + 1);
  }

 private:
  // Structurally terminated: nil up to parallel, sum, and restriction
  // (0 | 0 is as finished as 0). Name chains are bounded by the number of
  // definitions; guardedness rules out unprefixed cycles.
  bool all_nil(const CcsPtr& p, std::size_t name_budget) const {
    switch (p->kind) {
      case CcsKind::Nil:
        return true;
      case CcsKind::Par:
      case CcsKind::Sum:
        return all_nil(p->left, name_budget) && all_nil(p->right, name_budget);
      case CcsKind::Restrict:
        return all_nil(p->left, name_budget);
      case CcsKind::Name: {
        if (name_budget == 0) return false;
        auto it = defs_.find(p->name);
        return it != defs_.end() && all_nil(it->second, name_budget - 1);
      }
      default:
        return false;
    }
  }

  CcsPtr resolve(const std::string& state) const { return parse_ccs_term_strict(state); }

  CcsDefs defs_;
};

}  // namespace

std::shared_ptr<const OpSemContract> ccs_as_opsem(CcsDefs defs) {
  return std::make_shared<CcsOpSem>(std::move(defs));
}

}  // namespace opdl
