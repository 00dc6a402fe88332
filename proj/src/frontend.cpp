#include "opdl/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace opdl {

namespace {

// ---- character cursor -------------------------------------------------------

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;

  [[noreturn]] void err(const std::string& message) const {
    throw ParseError(message, pos);
  }
  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool at_end() { return peek() == '\0'; }
  bool try_eat(char c) {
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  void eat(char c) {
    if (!try_eat(c)) err(std::string("expected '") + c + "'");
  }
  bool try_eat_word(const std::string& w) {
    skip_ws();
    if (text.compare(pos, w.size(), w) != 0) return false;
    // Word boundary for alphanumeric keywords.
    if (std::isalnum(static_cast<unsigned char>(w.back()))) {
      std::size_t after = pos + w.size();
      if (after < text.size() &&
          (std::isalnum(static_cast<unsigned char>(text[after])) || text[after] == '_'))
        return false;
    }
    pos += w.size();
    return true;
  }
  // Identifier with the charset controlled by `extra` (mid-identifier chars).
  std::string ident(const std::string& extra) {
    skip_ws();
    if (pos >= text.size() ||
        !(std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      err("expected an identifier");
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
            extra.find(text[pos]) != std::string::npos))
      ++pos;
    return text.substr(start, pos - start);
  }
  std::string quoted() {
    skip_ws();
    eat('"');
    std::string out;
    while (pos < text.size() && text[pos] != '"') {
      if (text[pos] == '\\' && pos + 1 < text.size()) ++pos;
      out.push_back(text[pos++]);
    }
    if (pos >= text.size()) err("unterminated string literal");
    ++pos;
    return out;
  }
  // Balanced { ... } body, returned without the outer braces.
  std::string braced() {
    skip_ws();
    eat('{');
    std::size_t start = pos;
    int depth = 1;
    while (pos < text.size()) {
      if (text[pos] == '{') ++depth;
      if (text[pos] == '}' && --depth == 0) {
        std::string out = text.substr(start, pos - start);
        ++pos;
        return out;
      }
      ++pos;
    }
    err("unterminated '{'");
  }
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// ---- formula / program parsing ----------------------------------------------

constexpr const char* kIdentExtra = ".'@";

bool is_keyword(const std::string& w) {
  static const std::set<std::string> kw{"true", "false", "skip",  "abort", "eps",
                                        "ccs",  "chor",  "tau",   "new",   "in",
                                        "if",   "else"};
  return kw.count(w) > 0;
}

struct TermParser {
  Cursor cur;
  const OpSemRegistry& reg;

  FormulaPtr formula() { return iff_level(); }

  FormulaPtr iff_level() {
    FormulaPtr lhs = impl_level();
    if (cur.try_eat_word("<->")) return mk_iff(lhs, iff_level());
    return lhs;
  }
  FormulaPtr impl_level() {
    FormulaPtr lhs = or_level();
    cur.skip_ws();
    if (cur.text.compare(cur.pos, 2, "->") == 0) {
      cur.pos += 2;
      return mk_implies(lhs, impl_level());
    }
    return lhs;
  }
  FormulaPtr or_level() {
    FormulaPtr f = and_level();
    while (true) {
      cur.skip_ws();
      // '|' but not part of another token; '<->' handled above.
      if (cur.peek() != '|') return f;
      ++cur.pos;
      f = f_or(f, and_level());
    }
  }
  FormulaPtr and_level() {
    FormulaPtr f = unary();
    while (cur.try_eat('&')) f = f_and(f, unary());
    return f;
  }
  FormulaPtr unary() {
    char c = cur.peek();
    if (c == '~') {
      ++cur.pos;
      return negate(unary());
    }
    if (c == '[') {
      ++cur.pos;
      ProgramPtr p = program();
      cur.eat(']');
      return f_box(std::move(p), unary());
    }
    if (c == '<') {
      ++cur.pos;
      ProgramPtr p = program();
      cur.eat('>');
      return f_dia(std::move(p), unary());
    }
    if (c == '(') {
      ++cur.pos;
      FormulaPtr f = formula();
      cur.eat(')');
      return f;
    }
    if (c == '"') return f_pos(cur.quoted());
    if (cur.try_eat_word("true")) return f_top();
    if (cur.try_eat_word("false")) return f_bot();
    return f_pos(cur.ident(kIdentExtra));
  }

  ProgramPtr program() { return choice_level(); }

  ProgramPtr choice_level() {
    ProgramPtr p = seq_level();
    while (cur.try_eat('+')) p = p_choice(p, seq_level());
    return p;
  }
  ProgramPtr seq_level() {
    ProgramPtr p = star_level();
    while (cur.try_eat(';')) p = p_seq(p, star_level());
    return p;
  }
  ProgramPtr star_level() {
    ProgramPtr p = prog_primary();
    while (cur.try_eat('*')) p = p_star(p);
    return p;
  }
  ProgramPtr prog_primary() {
    char c = cur.peek();
    if (c == '(') {
      ++cur.pos;
      ProgramPtr p = program();
      cur.eat(')');
      return p;
    }
    if (c == '?') {
      ++cur.pos;
      return p_test(unary());
    }
    if (c == '"') return p_inst(cur.quoted());
    if (cur.try_eat_word("skip") || cur.try_eat_word("eps")) return p_term();
    if (cur.try_eat_word("abort")) return p_stuck();
    std::size_t mark = cur.pos;
    std::string name = cur.ident(kIdentExtra);
    if ((name == "ccs" || name == "chor") && cur.peek() == '{')
      return make_foreign(name, cur.braced(), reg);
    if (is_keyword(name)) {
      cur.pos = mark;
      cur.err("unexpected keyword '" + name + "' in a program");
    }
    return p_inst(name);
  }
};

// ---- canonical rendering ----------------------------------------------------

bool plain_ident(const std::string& s) {
  if (s.empty() || is_keyword(s)) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          std::string(kIdentExtra).find(c) != std::string::npos))
      return false;
  return true;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string atom_text(const std::string& s) {
  return plain_ident(s) ? s : quote(s);
}

std::string render_formula(const FormulaPtr& f, int min_prec);

// Program precedence: choice 1, seq 2, star/atoms 3.
std::string render_program(const ProgramPtr& p, int min_prec) {
  auto wrap = [&](int prec, std::string s) {
    return prec < min_prec ? "(" + std::move(s) + ")" : std::move(s);
  };
  switch (p->kind) {
    case ProgKind::Terminated: return "skip";
    case ProgKind::Stuck: return "abort";
    case ProgKind::Inst: return atom_text(p->name);
    case ProgKind::Test: return "?" + render_formula(p->test, 3);
    case ProgKind::Seq:
      return wrap(2, render_program(p->left, 2) + ";" + render_program(p->right, 3));
    case ProgKind::Choice:
      return wrap(1, render_program(p->left, 1) + " + " + render_program(p->right, 2));
    case ProgKind::Star:
      return render_program(p->left, 4) + "*";
    case ProgKind::Foreign:
      return p->name + "{ " + p->term + " }";
  }
  return "?";
}

// Formula precedence: or 1, and 2, prefixes/atoms 3.
std::string render_formula(const FormulaPtr& f, int min_prec) {
  auto wrap = [&](int prec, std::string s) {
    return prec < min_prec ? "(" + std::move(s) + ")" : std::move(s);
  };
  switch (f->kind) {
    case FKind::Top: return "true";
    case FKind::Bot: return "false";
    case FKind::Pos: return atom_text(f->atom);
    case FKind::Neg: return "~" + atom_text(f->atom);
    case FKind::Or:
      return wrap(1, render_formula(f->left, 1) + " | " + render_formula(f->right, 2));
    case FKind::And:
      return wrap(2, render_formula(f->left, 2) + " & " + render_formula(f->right, 3));
    case FKind::Box:
      return "[" + render_program(f->prog, 0) + "]" + render_formula(f->left, 3);
    case FKind::Dia:
      return "<" + render_program(f->prog, 0) + ">" + render_formula(f->left, 3);
  }
  return "?";
}

}  // namespace

std::string render(const FormulaPtr& f) { return render_formula(f, 0); }
std::string render(const ProgramPtr& p) { return render_program(p, 0); }

std::string render(const Sequent& s) {
  std::string out;
  for (const auto& f : s) {
    if (!out.empty()) out += ", ";
    out += render(f);
  }
  return out;
}

FormulaPtr parse_formula(const std::string& text, const OpSemRegistry& reg) {
  TermParser p{Cursor{text}, reg};
  FormulaPtr f = p.formula();
  if (!p.cur.at_end()) p.cur.err("trailing input after the formula");
  return f;
}

ProgramPtr parse_program(const std::string& text, const OpSemRegistry& reg) {
  TermParser p{Cursor{text}, reg};
  ProgramPtr r = p.program();
  if (!p.cur.at_end()) p.cur.err("trailing input after the program");
  return r;
}

Sequent parse_sequent(const std::string& text, const OpSemRegistry& reg) {
  Sequent s;
  TermParser p{Cursor{text}, reg};
  if (p.cur.at_end()) return s;
  s.insert(p.formula());
  while (p.cur.try_eat(',')) s.insert(p.formula());
  if (!p.cur.at_end()) p.cur.err("trailing input after the sequent");
  return s;
}

// ---- CCS --------------------------------------------------------------------

namespace {

// Precedence: new..in 0 (extends right), | 1, + 2, prefix/atoms 3.
struct CcsParser {
  Cursor cur;

  CcsPtr term() {
    if (cur.try_eat_word("new")) {
      std::string a = cur.ident("");
      if (!cur.try_eat_word("in")) cur.err("expected 'in' after the restricted action");
      return ccs_restrict(a, term());
    }
    return par_level();
  }
  CcsPtr par_level() {
    CcsPtr p = sum_level();
    while (cur.try_eat('|')) p = ccs_par(p, sum_level());
    return p;
  }
  CcsPtr sum_level() {
    CcsPtr p = primary();
    while (cur.try_eat('+')) p = ccs_sum(p, primary());
    return p;
  }
  CcsPtr primary() {
    char c = cur.peek();
    if (c == '(') {
      ++cur.pos;
      CcsPtr p = term();
      cur.eat(')');
      return p;
    }
    if (c == '0') {
      ++cur.pos;
      return ccs_nil();
    }
    if (c == '\'') {
      ++cur.pos;
      std::string a = cur.ident("");
      cur.eat('.');
      return ccs_prefix({CcsActKind::CoAct, a}, primary());
    }
    if (cur.try_eat_word("new")) {
      std::string a = cur.ident("");
      if (!cur.try_eat_word("in")) cur.err("expected 'in' after the restricted action");
      return ccs_restrict(a, term());
    }
    std::string name = cur.ident("");
    if (name == "tau") {
      cur.eat('.');
      return ccs_prefix({CcsActKind::Tau, {}}, primary());
    }
    if (cur.peek() == '.') {
      ++cur.pos;
      return ccs_prefix({CcsActKind::Act, name}, primary());
    }
    return ccs_name(name);
  }
};

std::string render_ccs_at(const CcsPtr& p, int min_prec) {
  auto wrap = [&](int prec, std::string s) {
    return prec < min_prec ? "(" + std::move(s) + ")" : std::move(s);
  };
  switch (p->kind) {
    case CcsKind::Nil: return "0";
    case CcsKind::Prefix:
      return render_action(p->act) + "." + render_ccs_at(p->left, 3);
    case CcsKind::Par:
      return wrap(1, render_ccs_at(p->left, 1) + " | " + render_ccs_at(p->right, 2));
    case CcsKind::Sum:
      return wrap(2, render_ccs_at(p->left, 2) + " + " + render_ccs_at(p->right, 3));
    case CcsKind::Restrict:
      return wrap(1, "new " + p->name + " in " + render_ccs_at(p->left, 0));
    case CcsKind::Name: return p->name;
  }
  return "?";
}

}  // namespace

std::string render_ccs(const CcsPtr& p) { return render_ccs_at(p, 0); }

CcsPtr parse_ccs_term_strict(const std::string& text) {
  CcsParser p{Cursor{text}};
  CcsPtr out = p.term();
  if (!p.cur.at_end()) p.cur.err("trailing input after the process");
  return out;
}

// ---- choreographies ---------------------------------------------------------

namespace {

struct ChorParser {
  Cursor cur;

  ChorPtr term() {
    char c = cur.peek();
    if (c == '0') {
      ++cur.pos;
      return chor_nil();
    }
    if (cur.try_eat_word("if")) {
      std::string p = cur.ident("");
      cur.eat('.');
      std::string cond = cur.ident("");
      cur.eat('{');
      ChorPtr then_c = term();
      cur.eat('}');
      if (!cur.try_eat_word("else")) cur.err("expected 'else'");
      cur.eat('{');
      ChorPtr else_c = term();
      cur.eat('}');
      ChorPtr cont = chor_nil();
      if (cur.try_eat(';')) cont = term();
      return chor_cond(p, cond, then_c, else_c, cont);
    }
    std::string first = cur.ident("");
    char next = cur.peek();
    if (next == '#') {
      ++cur.pos;
      std::string p = cur.ident("");
      cur.eat(';');
      return chor_seqi(chor_cont(first, p), term());
    }
    if (next == '-') {  // p -> q[l]
      cur.pos += 1;
      cur.eat('>');
      std::string q = cur.ident("");
      cur.eat('[');
      std::string label = trim(capture_until(']'));
      cur.eat(']');
      cur.eat(';');
      return chor_seqi(chor_sel(first, q, label), term());
    }
    if (next == '.') {
      ++cur.pos;
      // Scan ahead to decide between assignment and communication.
      std::size_t scan = cur.pos;
      int depth = 0;
      char which = '\0';
      while (scan + 1 < cur.text.size()) {
        char a = cur.text[scan];
        if (a == '{' || a == '[') ++depth;
        if (a == '}' || a == ']') --depth;
        if (depth == 0) {
          if (a == ':' && cur.text[scan + 1] == '=') { which = 'a'; break; }
          if (a == '-' && cur.text[scan + 1] == '>') { which = 'c'; break; }
          if (a == ';') break;
        }
        ++scan;
      }
      if (which == 'a') {
        std::string var = trim(cur.text.substr(cur.pos, scan - cur.pos));
        cur.pos = scan + 2;
        std::string expr = trim(capture_until(';'));
        cur.eat(';');
        return chor_seqi(chor_assign(first, var, expr), term());
      }
      if (which == 'c') {
        std::string expr = trim(cur.text.substr(cur.pos, scan - cur.pos));
        cur.pos = scan + 2;
        std::string q = cur.ident("");
        cur.eat('.');
        std::string var = cur.ident("");
        cur.eat(';');
        return chor_seqi(chor_com(first, expr, q, var), term());
      }
      cur.err("malformed instruction after '" + first + ".'");
    }
    return chor_call(first);  // bare name: a tail call
  }

  // Raw text until `stop` at brace/bracket depth 0 (not consumed).
  std::string capture_until(char stop) {
    std::size_t start = cur.pos;
    int depth = 0;
    while (cur.pos < cur.text.size()) {
      char a = cur.text[cur.pos];
      if (a == '{' || a == '[') ++depth;
      if (a == '}' || a == ']') {
        if (depth == 0 && a == stop) break;
        --depth;
      }
      if (depth == 0 && a == stop) break;
      if (depth < 0) break;
      ++cur.pos;
    }
    return cur.text.substr(start, cur.pos - start);
  }
};

}  // namespace

std::string render_chor(const ChorPtr& c) {
  switch (c->kind) {
    case ChorKind::Nil: return "0";
    case ChorKind::SeqI: return render_instr(c->instr) + "; " + render_chor(c->left);
    case ChorKind::Cond:
      return "if " + c->p + "." + c->cond + " { " + render_chor(c->left) +
             " } else { " + render_chor(c->right) + " }; " + render_chor(c->cont);
    case ChorKind::Call: return c->name;
  }
  return "?";
}

ChorPtr parse_chor_term_strict(const std::string& text) {
  ChorParser p{Cursor{text}};
  ChorPtr out = p.term();
  if (!p.cur.at_end()) p.cur.err("trailing input after the choreography");
  return out;
}

// ---- definition files -------------------------------------------------------

namespace {

std::vector<std::pair<std::string, std::string>> def_lines(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto cut = line.find('%'); cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find(":=");
    if (sep == std::string::npos)
      throw ParseError("definition line " + std::to_string(lineno) +
                           " lacks ':='",
                       0);
    out.push_back({trim(line.substr(0, sep)), trim(line.substr(sep + 2))});
  }
  return out;
}

}  // namespace

CcsDefs parse_ccs_file(const std::string& text) {
  CcsDefs defs;
  for (auto& [name, body] : def_lines(text)) {
    if (defs.count(name))
      throw ParseError("duplicate definition of '" + name + "'", 0);
    defs[name] = parse_ccs_term_strict(body);
  }
  return defs;
}

ChorDefs parse_chor_file(const std::string& text) {
  ChorDefs defs;
  for (auto& [name, body] : def_lines(text)) {
    if (defs.count(name))
      throw ParseError("duplicate definition of '" + name + "'", 0);
    defs[name] = parse_chor_term_strict(body);
  }
  return defs;
}

// ---- proof scripts ----------------------------------------------------------

namespace {

struct Sexp {
  bool is_atom = false;
  std::string atom;  // bare atoms and string literals alike
  bool was_string = false;
  std::vector<Sexp> items;
};

struct SexpReader {
  Cursor cur;

  Sexp read() {
    char c = cur.peek();
    if (c == '(') {
      ++cur.pos;
      Sexp list;
      while (cur.peek() != ')') {
        if (cur.at_end()) cur.err("unterminated list");
        list.items.push_back(read());
      }
      ++cur.pos;
      return list;
    }
    if (c == '"') {
      Sexp s;
      s.is_atom = true;
      s.was_string = true;
      s.atom = cur.quoted();
      return s;
    }
    cur.skip_ws();
    std::size_t start = cur.pos;
    while (cur.pos < cur.text.size() &&
           !std::isspace(static_cast<unsigned char>(cur.text[cur.pos])) &&
           cur.text[cur.pos] != '(' && cur.text[cur.pos] != ')')
      ++cur.pos;
    if (cur.pos == start) cur.err("expected an s-expression");
    Sexp s;
    s.is_atom = true;
    s.atom = cur.text.substr(start, cur.pos - start);
    return s;
  }
};

const Sexp* field(const Sexp& node, const std::string& key) {
  for (const auto& item : node.items)
    if (!item.is_atom && !item.items.empty() && item.items[0].is_atom &&
        item.items[0].atom == key)
      return &item;
  return nullptr;
}

}  // namespace

Derivation parse_proof(const std::string& text, const OpSemRegistry& reg) {
  SexpReader reader{Cursor{text}};
  Sexp top = reader.read();
  if (top.is_atom || top.items.empty() || !top.items[0].is_atom ||
      top.items[0].atom != "proof")
    throw ParseError("expected a (proof ...) form", 0);
  Derivation d;
  for (std::size_t i = 1; i < top.items.size(); ++i) {
    const Sexp& item = top.items[i];
    if (item.is_atom || item.items.empty() || !item.items[0].is_atom)
      throw ParseError("expected (root ...) or (node ...)", 0);
    const std::string& head = item.items[0].atom;
    if (head == "root") {
      if (item.items.size() != 2 || !item.items[1].is_atom)
        throw ParseError("(root <id>) expects one id", 0);
      d.root = item.items[1].atom;
      continue;
    }
    if (head != "node" || item.items.size() < 2 || !item.items[1].is_atom)
      throw ParseError("expected (node <id> ...)", 0);
    const std::string id = item.items[1].atom;
    ProofNode node;
    if (const Sexp* seq = field(item, "sequent")) {
      for (std::size_t k = 1; k < seq->items.size(); ++k)
        node.sequent.insert(parse_formula(seq->items[k].atom, reg));
    } else {
      throw ParseError("node " + id + " lacks a sequent", 0);
    }
    const Sexp* rule = field(item, "rule");
    if (!rule || rule->items.size() < 2 || !rule->items[1].is_atom)
      throw ParseError("node " + id + " lacks a rule", 0);
    auto rid = rule_from_name(rule->items[1].atom);
    if (!rid) throw ParseError("unknown rule: " + rule->items[1].atom, 0);
    node.rule.rule = *rid;
    if (*rid == RuleId::Loop) {
      if (rule->items.size() != 3)
        throw ParseError("(rule loop <target>) expects one target", 0);
      node.rule.loop_target = rule->items[2].atom;
    }
    if (const Sexp* p = field(item, "principal"))
      node.rule.principal = parse_formula(p->items.at(1).atom, reg);
    if (const Sexp* p = field(item, "cut"))
      node.rule.cut_formula = parse_formula(p->items.at(1).atom, reg);
    if (const Sexp* p = field(item, "prog"))
      node.rule.k_prog = parse_program(p->items.at(1).atom, reg);
    if (const Sexp* p = field(item, "premises"))
      for (std::size_t k = 1; k < p->items.size(); ++k)
        node.rule.premises.push_back(p->items[k].atom);
    d.nodes.emplace(id, std::move(node));
  }
  if (d.root.empty()) throw ParseError("proof lacks a (root ...) entry", 0);
  if (!d.nodes.count(d.root))
    throw ParseError("root refers to an undefined node '" + d.root + "'", 0);
  for (const auto& [id, node] : d.nodes) {
    for (const auto& p : node.rule.premises)
      if (!d.nodes.count(p))
        throw ParseError("node '" + id + "' refers to an undefined premise '" +
                             p + "'",
                         0);
    if (node.rule.loop_target && !d.nodes.count(*node.rule.loop_target))
      throw ParseError("node '" + id + "' refers to an undefined loop target '" +
                           *node.rule.loop_target + "'",
                       0);
  }
  return d;
}

std::string render_proof(const Derivation& d) {
  std::ostringstream out;
  out << "(proof\n (root " << d.root << ")\n";
  for (const auto& [id, node] : d.nodes) {
    out << " (node " << id << "\n  (sequent";
    for (const auto& f : node.sequent) out << " " << quote(render(f));
    out << ")\n  (rule " << rule_name(node.rule.rule);
    if (node.rule.loop_target) out << " " << *node.rule.loop_target;
    out << ")";
    if (node.rule.principal)
      out << "\n  (principal " << quote(render(*node.rule.principal)) << ")";
    if (node.rule.cut_formula)
      out << "\n  (cut " << quote(render(*node.rule.cut_formula)) << ")";
    if (node.rule.k_prog)
      out << "\n  (prog " << quote(render(*node.rule.k_prog)) << ")";
    if (!node.rule.premises.empty()) {
      out << "\n  (premises";
      for (const auto& p : node.rule.premises) out << " " << p;
      out << ")";
    }
    out << ")\n";
  }
  out << ")\n";
  return out.str();
}

// ---- frames -----------------------------------------------------------------

KripkeFrame parse_frame_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  KripkeFrame frame;
  frame.worlds = j.at("worlds").get<std::size_t>();
  auto check = [&](std::size_t w) {
    if (w >= frame.worlds)
      throw ParseError("world index out of range: " + std::to_string(w), 0);
  };
  if (j.contains("atoms"))
    for (auto& [name, arr] : j.at("atoms").items()) {
      WorldSet w = ws_empty(frame.worlds);
      for (auto& idx : arr) {
        std::size_t i = idx.get<std::size_t>();
        check(i);
        w[i] = true;
      }
      frame.atoms.emplace(name, std::move(w));
    }
  if (j.contains("labels"))
    for (auto& [name, arr] : j.at("labels").items()) {
      AccRel r = rel_empty(frame.worlds);
      for (auto& edge : arr) {
        std::size_t from = edge.at(0).get<std::size_t>();
        std::size_t to = edge.at(1).get<std::size_t>();
        check(from);
        check(to);
        r[from][to] = true;
      }
      frame.labels.emplace(name, std::move(r));
    }
  return frame;
}

std::string render_frame_json(const KripkeFrame& frame) {
  nlohmann::json j;
  j["worlds"] = frame.worlds;
  j["atoms"] = nlohmann::json::object();
  j["labels"] = nlohmann::json::object();
  for (const auto& [name, w] : frame.atoms) {
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i]) arr.push_back(i);
    j["atoms"][name] = std::move(arr);
  }
  for (const auto& [name, r] : frame.labels) {
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t k = 0; k < r.size(); ++k)
        if (r[i][k]) arr.push_back(nlohmann::json::array({i, k}));
    j["labels"][name] = std::move(arr);
  }
  return j.dump(2);
}

}  // namespace opdl
