#include "relearn/relcore/pddl.hpp"

#include "relearn/relcore/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace relearn {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  int line = 0;
  int column = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, column); }
  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
  const std::string& name() const {
    if (is_list) fail("expected a name, found a list");
    return atom;
  }
  const SExpr& list() const {
    if (!is_list) fail("expected a list, found '" + atom + "'");
    return *this;
  }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_document() {
    skip();
    if (pos_ >= text_.size()) throw ParseError("empty input", line_, col_);
    SExpr e = read();
    skip();
    if (pos_ < text_.size()) throw ParseError("trailing content after expression", line_, col_);
    return e;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  SExpr read() {
    SExpr e;
    e.line = line_;
    e.column = col_;
    char c = text_[pos_];
    if (c == ')') throw ParseError("unexpected ')'", line_, col_);
    if (c == '(') {
      e.is_list = true;
      advance();
      while (true) {
        skip();
        if (pos_ >= text_.size()) throw ParseError("unterminated list opened here", e.line, e.column);
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
      e.atom.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(d))));
      advance();
    }
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct TypedName {
  std::string name;
  std::string type;
  const SExpr* where;
};

// "a b - t c" -> (a,t) (b,t) (c,object)
std::vector<TypedName> read_typed_list(const std::vector<SExpr>& items, std::size_t first) {
  std::vector<TypedName> out;
  std::vector<const SExpr*> pending;
  for (std::size_t i = first; i < items.size(); ++i) {
    const SExpr& it = items[i];
    if (it.is_atom("-")) {
      if (i + 1 >= items.size()) it.fail("missing type after '-'");
      const SExpr& t = items[i + 1];
      if (t.is_list) t.fail("'either' types are not supported");
      if (pending.empty()) it.fail("type annotation without names");
      for (const SExpr* p : pending) out.push_back({p->atom, t.atom, p});
      pending.clear();
      ++i;
    } else {
      it.name();
      pending.push_back(&it);
    }
  }
  for (const SExpr* p : pending) out.push_back({p->atom, "object", p});
  return out;
}

const std::set<std::string> kSupportedRequirements = {":strips", ":typing",
                                                      ":negative-preconditions"};

struct LiteralContext {
  const Domain& domain;
  const std::map<std::string, std::pair<VarId, TypeId>>* vars = nullptr;  // lifted
  const Task* task = nullptr;                                             // ground
};

struct ParsedLiteral {
  PredicateId predicate;
  std::uint8_t arity;
  std::array<std::uint16_t, kMaxArity> args;
  bool positive;
};

ParsedLiteral read_literal(const SExpr& e, const LiteralContext& ctx) {
  e.list();
  bool positive = true;
  const SExpr* body = &e;
  if (!e.items.empty() && e.items[0].is_atom("not")) {
    if (e.items.size() != 2) e.fail("'not' takes exactly one argument");
    positive = false;
    body = &e.items[1];
    body->list();
  }
  if (body->items.empty()) body->fail("empty literal");
  const std::string& pname = body->items[0].name();
  if (pname == "and" || pname == "or" || pname == "forall" || pname == "exists" ||
      pname == "when" || pname == "imply") {
    body->fail("unsupported formula '" + pname + "'");
  }
  if (pname == "=") body->fail("equality is not supported");
  auto pid = ctx.domain.find_predicate(pname);
  if (!pid) body->items[0].fail("undeclared predicate '" + pname + "'");
  const PredicateSchema& schema = ctx.domain.predicates[*pid];
  std::size_t nargs = body->items.size() - 1;
  if (nargs != schema.arity()) {
    body->fail("arity mismatch: '" + pname + "' takes " + std::to_string(schema.arity()) +
               " arguments, got " + std::to_string(nargs));
  }
  ParsedLiteral lit{*pid, static_cast<std::uint8_t>(nargs), {}, positive};
  for (std::size_t i = 0; i < nargs; ++i) {
    const SExpr& arg = body->items[i + 1];
    const std::string& a = arg.name();
    TypeId arg_type = 0;
    if (ctx.vars) {
      if (a.empty() || a[0] != '?') arg.fail("constants are not supported in operators: '" + a + "'");
      auto it = ctx.vars->find(a);
      if (it == ctx.vars->end()) arg.fail("unknown variable '" + a + "'");
      lit.args[i] = it->second.first;
      arg_type = it->second.second;
    } else {
      auto obj = ctx.task->find_object(a);
      if (!obj) arg.fail("undeclared object '" + a + "'");
      lit.args[i] = *obj;
      arg_type = ctx.task->object_types[*obj];
    }
    if (!ctx.domain.is_subtype(arg_type, schema.parameter_types[i])) {
      arg.fail("type mismatch: '" + a + "' is not a " +
               ctx.domain.types[schema.parameter_types[i]].name);
    }
  }
  return lit;
}

// Conjunction: "()", "(and l1 l2 ...)" or a single literal.
std::vector<ParsedLiteral> read_conjunction(const SExpr& e, const LiteralContext& ctx) {
  e.list();
  std::vector<ParsedLiteral> out;
  if (e.items.empty()) return out;
  if (e.items[0].is_atom("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) out.push_back(read_literal(e.items[i], ctx));
  } else {
    out.push_back(read_literal(e, ctx));
  }
  return out;
}

LiftedAtom to_lifted(const ParsedLiteral& l) {
  LiftedAtom a;
  a.predicate = l.predicate;
  a.arity = l.arity;
  for (std::size_t i = 0; i < l.arity; ++i) a.vars[i] = static_cast<VarId>(l.args[i]);
  return a;
}

Atom to_atom(const ParsedLiteral& l) {
  Atom a;
  a.predicate = l.predicate;
  a.arity = l.arity;
  for (std::size_t i = 0; i < l.arity; ++i) a.args[i] = l.args[i];
  return a;
}

const SExpr& expect_header(const SExpr& doc, std::string_view kind) {
  doc.list();
  if (doc.items.size() < 2 || !doc.items[0].is_atom("define")) doc.fail("expected (define ...)");
  const SExpr& head = doc.items[1].list();
  if (head.items.size() != 2 || !head.items[0].is_atom(kind)) {
    head.fail("expected (" + std::string(kind) + " <name>)");
  }
  head.items[1].name();
  return head;
}

void read_types(const SExpr& section, Domain& d) {
  auto typed = read_typed_list(section.items, 1);
  std::vector<std::pair<std::string, const TypedName*>> order;
  for (const auto& t : typed) {
    if (t.name == "object") continue;
    if (d.find_type(t.name)) t.where->fail("duplicate type '" + t.name + "'");
    d.types.push_back({t.name, std::nullopt});
  }
  for (const auto& t : typed) {
    if (t.name == "object") continue;
    auto parent = d.find_type(t.type);
    if (!parent) t.where->fail("undeclared parent type '" + t.type + "'");
    auto self = *d.find_type(t.name);
    d.types[self].parent = *parent;
  }
  for (std::size_t i = 1; i < d.types.size(); ++i) {
    std::set<TypeId> seen;
    std::optional<TypeId> cur = static_cast<TypeId>(i);
    while (cur) {
      if (!seen.insert(*cur).second) section.fail("cyclic type hierarchy at '" + d.types[i].name + "'");
      cur = d.types[*cur].parent;
    }
  }
}

void read_predicates(const SExpr& section, Domain& d) {
  for (std::size_t i = 1; i < section.items.size(); ++i) {
    const SExpr& p = section.items[i].list();
    if (p.items.empty()) p.fail("empty predicate declaration");
    const std::string& pname = p.items[0].name();
    if (d.find_predicate(pname)) p.fail("duplicate predicate '" + pname + "'");
    PredicateSchema schema{pname, {}};
    for (const auto& param : read_typed_list(p.items, 1)) {
      auto t = d.find_type(param.type);
      if (!t) param.where->fail("undeclared type '" + param.type + "'");
      schema.parameter_types.push_back(*t);
    }
    if (schema.arity() > kMaxArity) p.fail("predicate arity exceeds " + std::to_string(kMaxArity));
    d.predicates.push_back(std::move(schema));
  }
}

void read_action(const SExpr& section, Domain& d, bool allow_negative) {
  if (section.items.size() < 2) section.fail("action without a name");
  const std::string& aname = section.items[1].name();
  if (d.find_action(aname)) section.items[1].fail("duplicate action '" + aname + "'");
  ActionSchema schema{aname, {}, {}};
  Operator op;
  op.name = aname;
  op.action = static_cast<ActionId>(d.actions.size());
  std::map<std::string, std::pair<VarId, TypeId>> vars;
  const SExpr* pre = nullptr;
  const SExpr* eff = nullptr;
  for (std::size_t i = 2; i < section.items.size(); i += 2) {
    const SExpr& key = section.items[i];
    if (i + 1 >= section.items.size()) key.fail("missing value for '" + key.name() + "'");
    const SExpr& value = section.items[i + 1];
    if (key.is_atom(":parameters")) {
      for (const auto& param : read_typed_list(value.list().items, 0)) {
        if (param.name.empty() || param.name[0] != '?') {
          param.where->fail("parameter names must start with '?'");
        }
        if (vars.count(param.name)) param.where->fail("duplicate parameter '" + param.name + "'");
        auto t = d.find_type(param.type);
        if (!t) param.where->fail("undeclared type '" + param.type + "'");
        vars[param.name] = {static_cast<VarId>(schema.parameter_names.size()), *t};
        schema.parameter_names.push_back(param.name);
        schema.parameter_types.push_back(*t);
      }
      if (schema.arity() > kMaxArity) value.fail("action arity exceeds " + std::to_string(kMaxArity));
    } else if (key.is_atom(":precondition")) {
      pre = &value;
    } else if (key.is_atom(":effect")) {
      eff = &value;
    } else {
      key.fail("unsupported action field '" + key.name() + "'");
    }
  }
  LiteralContext ctx{d, &vars, nullptr};
  if (pre) {
    for (const auto& l : read_conjunction(*pre, ctx)) {
      if (!l.positive && !allow_negative) {
        pre->fail("negative precondition requires :negative-preconditions");
      }
      op.preconditions.push_back({to_lifted(l), l.positive});
    }
  }
  if (eff) {
    for (const auto& l : read_conjunction(*eff, ctx)) {
      (l.positive ? op.add_effects : op.delete_effects).push_back(to_lifted(l));
    }
  }
  op.parameter_names = schema.parameter_names;
  op.parameter_types = schema.parameter_types;
  for (std::size_t i = 0; i < schema.arity(); ++i) op.action_binding.push_back(static_cast<VarId>(i));
  op.normalize();
  d.actions.push_back(std::move(schema));
  d.gt_operators.push_back(std::move(op));
}

std::string join_typed(const std::vector<std::string>& names, const std::vector<TypeId>& types,
                       const Domain& d) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) s += " ";
    s += names[i] + " - " + d.types[types[i]].name;
  }
  return s;
}

std::string lifted_text(const Domain& d, const std::vector<std::string>& names, const LiftedAtom& a) {
  std::string s = "(" + d.predicates[a.predicate].name;
  for (std::size_t i = 0; i < a.arity; ++i) s += " " + names[a.vars[i]];
  return s + ")";
}

void write_operator(std::ostringstream& out, const Domain& d, const Operator& op,
                    const std::string& name) {
  out << "  (:action " << name << "\n";
  out << "    :parameters (" << join_typed(op.parameter_names, op.parameter_types, d) << ")\n";
  out << "    :precondition (and";
  for (const auto& l : op.preconditions) {
    std::string t = lifted_text(d, op.parameter_names, l.atom);
    out << "\n      " << (l.positive ? t : "(not " + t + ")");
  }
  out << ")\n    :effect (and";
  for (const auto& a : op.add_effects) out << "\n      " << lifted_text(d, op.parameter_names, a);
  for (const auto& a : op.delete_effects) {
    out << "\n      (not " << lifted_text(d, op.parameter_names, a) << ")";
  }
  out << "))\n";
}

void write_vocabulary(std::ostringstream& out, const Domain& d,
                      const std::vector<std::string>& requirements) {
  if (!requirements.empty()) {
    out << "  (:requirements";
    for (const auto& r : requirements) out << " " << r;
    out << ")\n";
  }
  if (d.types.size() > 1) {
    // One declaration per line keeps type ids stable across a round trip.
    out << "  (:types";
    for (std::size_t i = 1; i < d.types.size(); ++i) {
      out << "\n    " << d.types[i].name << " - " << d.types[*d.types[i].parent].name;
    }
    out << ")\n";
  }
  out << "  (:predicates";
  for (const auto& p : d.predicates) {
    out << "\n    (" << p.name;
    for (std::size_t i = 0; i < p.arity(); ++i) out << " ?x" << i << " - " << d.types[p.parameter_types[i]].name;
    out << ")";
  }
  out << ")\n";
}

}  // namespace

Domain parse_domain(std::string_view text) {
  SExpr doc = Reader(text).read_document();
  const SExpr& head = expect_header(doc, "domain");
  Domain d;
  d.name = head.items[1].atom;
  d.types.push_back({"object", std::nullopt});
  bool allow_negative = false;
  bool seen_predicates = false;
  for (std::size_t i = 2; i < doc.items.size(); ++i) {
    const SExpr& section = doc.items[i].list();
    if (section.items.empty()) section.fail("empty section");
    const std::string& key = section.items[0].name();
    if (key == ":requirements") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const std::string& r = section.items[j].name();
        if (!kSupportedRequirements.count(r)) section.items[j].fail("unsupported requirement '" + r + "'");
        if (r == ":negative-preconditions") allow_negative = true;
        d.requirements.push_back(r);
      }
    } else if (key == ":types") {
      if (seen_predicates) section.fail(":types must precede :predicates");
      read_types(section, d);
    } else if (key == ":predicates") {
      seen_predicates = true;
      read_predicates(section, d);
    } else if (key == ":action") {
      read_action(section, d, allow_negative);
    } else if (key == ":constants") {
      section.fail("constants are not supported");
    } else {
      section.fail("unsupported section '" + key + "'");
    }
  }
  d.validate();
  return d;
}

Task parse_problem(std::string_view text, std::shared_ptr<const Domain> domain) {
  SExpr doc = Reader(text).read_document();
  const SExpr& head = expect_header(doc, "problem");
  Task task;
  task.name = head.items[1].atom;
  task.domain = domain;
  const Domain& d = *domain;
  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  for (std::size_t i = 2; i < doc.items.size(); ++i) {
    const SExpr& section = doc.items[i].list();
    if (section.items.empty()) section.fail("empty section");
    const std::string& key = section.items[0].name();
    if (key == ":domain") {
      if (section.items.size() != 2) section.fail("expected (:domain <name>)");
      if (section.items[1].name() != d.name) {
        section.items[1].fail("problem is for domain '" + section.items[1].atom + "', not '" + d.name + "'");
      }
    } else if (key == ":objects") {
      std::vector<std::pair<std::string, TypeId>> objs;
      for (const auto& o : read_typed_list(section.items, 1)) {
        auto t = d.find_type(o.type);
        if (!t) o.where->fail("unknown object type '" + o.type + "'");
        for (const auto& prev : objs) {
          if (prev.first == o.name) o.where->fail("duplicate object '" + o.name + "'");
        }
        objs.emplace_back(o.name, *t);
      }
      std::sort(objs.begin(), objs.end());
      for (auto& [n, t] : objs) {
        task.object_names.push_back(n);
        task.object_types.push_back(t);
      }
    } else if (key == ":init") {
      init = &section;
    } else if (key == ":goal") {
      if (section.items.size() != 2) section.fail("expected (:goal <formula>)");
      goal = &section.items[1];
    } else {
      section.fail("unsupported section '" + key + "'");
    }
  }
  LiteralContext ctx{d, nullptr, &task};
  if (init) {
    std::vector<Atom> atoms;
    for (std::size_t i = 1; i < init->items.size(); ++i) {
      ParsedLiteral l = read_literal(init->items[i], ctx);
      if (!l.positive) init->items[i].fail("negative literals are not allowed in :init");
      atoms.push_back(to_atom(l));
    }
    task.init = State(std::move(atoms));
  }
  if (goal) {
    for (const auto& l : read_conjunction(*goal, ctx)) task.goal.push_back({to_atom(l), l.positive});
    std::sort(task.goal.begin(), task.goal.end());
    task.goal.erase(std::unique(task.goal.begin(), task.goal.end()), task.goal.end());
  }
  return task;
}

std::string serialize_domain(const Domain& d) {
  std::ostringstream out;
  out << "(define (domain " << d.name << ")\n";
  write_vocabulary(out, d, d.requirements);
  for (const auto& op : d.gt_operators) write_operator(out, d, op, op.name);
  out << ")\n";
  return out.str();
}

std::string serialize_problem(const Task& task) {
  const Domain& d = *task.domain;
  std::ostringstream out;
  out << "(define (problem " << task.name << ")\n";
  out << "  (:domain " << d.name << ")\n";
  out << "  (:objects";
  std::map<TypeId, std::vector<std::string>> by_type;
  for (std::size_t i = 0; i < task.num_objects(); ++i) by_type[task.object_types[i]].push_back(task.object_names[i]);
  for (const auto& [t, names] : by_type) {
    out << "\n   ";
    for (const auto& n : names) out << " " << n;
    out << " - " << d.types[t].name;
  }
  out << ")\n  (:init";
  for (const auto& a : task.init) out << "\n    " << to_string(task, a);
  out << ")\n  (:goal (and";
  for (const auto& g : task.goal) out << "\n    " << to_string(task, g);
  out << ")))\n";
  return out.str();
}

std::string serialize_operators(const Domain& domain, std::span<const Operator> ops,
                                std::string_view name) {
  std::ostringstream out;
  out << "(define (domain " << name << ")\n";
  std::vector<std::string> req = {":strips", ":typing"};
  bool negative = false;
  for (const auto& op : ops) {
    for (const auto& l : op.preconditions) negative |= !l.positive;
  }
  if (negative) req.push_back(":negative-preconditions");
  write_vocabulary(out, domain, req);
  std::map<ActionId, int> seen;
  std::map<ActionId, int> total;
  for (const auto& op : ops) ++total[op.action];
  for (const auto& op : ops) {
    std::string n = domain.actions[op.action].name;
    if (total[op.action] > 1) n += "__op" + std::to_string(seen[op.action]++);
    // The first parameters must bind the action arguments in order.
    write_operator(out, domain, canonical_operator_form(op), n);
  }
  out << ")\n";
  return out.str();
}

std::vector<Operator> parse_operators(std::string_view text, const Domain& domain) {
  Domain file = parse_domain(text);
  std::vector<Operator> out;
  for (const Operator& src : file.gt_operators) {
    std::string base = src.name.substr(0, src.name.find("__op"));
    auto action = domain.find_action(base);
    if (!action) throw ModelError("operator '" + src.name + "' names no action of domain " + domain.name);
    const ActionSchema& schema = domain.actions[*action];
    if (src.arity() < schema.arity()) throw ModelError("operator '" + src.name + "' has too few parameters");
    Operator op;
    op.name = src.name;
    op.action = *action;
    op.parameter_names = src.parameter_names;
    for (TypeId t : src.parameter_types) {
      auto mapped = domain.find_type(file.types[t].name);
      if (!mapped) throw ModelError("operator '" + src.name + "' uses unknown type " + file.types[t].name);
      op.parameter_types.push_back(*mapped);
    }
    for (std::size_t i = 0; i < schema.arity(); ++i) op.action_binding.push_back(static_cast<VarId>(i));
    auto remap = [&](LiftedAtom a) {
      auto p = domain.find_predicate(file.predicates[a.predicate].name);
      if (!p) throw ModelError("operator '" + src.name + "' uses unknown predicate");
      a.predicate = *p;
      return a;
    };
    for (const auto& l : src.preconditions) op.preconditions.push_back({remap(l.atom), l.positive});
    for (const auto& a : src.add_effects) op.add_effects.push_back(remap(a));
    for (const auto& a : src.delete_effects) op.delete_effects.push_back(remap(a));
    op.normalize();
    out.push_back(std::move(op));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace relearn
