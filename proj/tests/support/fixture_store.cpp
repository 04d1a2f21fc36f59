#include "fixture_store.hpp"

#include <httplib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sparqlgen/sparql.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen::testing {

using nlohmann::json;
using sparql::Expression;
using sparql::GraphPattern;
using sparql::QueryAst;
using sparql::Term;

namespace {

constexpr const char* kXsd = "http://www.w3.org/2001/XMLSchema#";
const std::string kInteger = std::string(kXsd) + "integer";
const std::string kDecimal = std::string(kXsd) + "decimal";
const std::string kDouble = std::string(kXsd) + "double";
const std::string kBoolean = std::string(kXsd) + "boolean";

using Binding = std::map<std::string, RdfTerm>;
using Solutions = std::vector<Binding>;
using Prefixes = std::map<std::string, std::string>;

RdfTerm iri(std::string v) { return RdfTerm{RdfTerm::Kind::iri, std::move(v), {}, {}}; }
RdfTerm literal(std::string v, std::string dt = {}, std::string lang = {}) {
  return RdfTerm{RdfTerm::Kind::literal, std::move(v), std::move(dt), std::move(lang)};
}
RdfTerm boolean(bool b) { return literal(b ? "true" : "false", kBoolean); }

std::string format_number(double v, bool integral) {
  if (integral) return std::to_string(static_cast<long long>(std::llround(v)));
  std::ostringstream os;
  os.precision(15);
  os << v;
  std::string s = os.str();
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

RdfTerm number(double v, bool integral) {
  return literal(format_number(v, integral), integral ? kInteger : kDecimal);
}

std::optional<double> numeric_value(const RdfTerm& t) {
  if (t.kind != RdfTerm::Kind::literal) return std::nullopt;
  if (t.datatype != kInteger && t.datatype != kDecimal && t.datatype != kDouble &&
      t.datatype.rfind(std::string(kXsd) + "int", 0) != 0 &&
      t.datatype != std::string(kXsd) + "float") {
    return std::nullopt;
  }
  try {
    size_t used = 0;
    const double v = std::stod(t.value, &used);
    if (used != t.value.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool is_integral(const RdfTerm& t) {
  return t.datatype == kInteger || t.datatype.rfind(std::string(kXsd) + "int", 0) == 0;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char c = s[++i];
      out += c == 'n' ? '\n' : c == 't' ? '\t' : c == 'r' ? '\r' : c;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::string expand(const std::string& prefixed, const Prefixes& prefixes) {
  const auto colon = prefixed.find(':');
  auto it = prefixes.find(prefixed.substr(0, colon));
  if (colon == std::string::npos || it == prefixes.end()) {
    throw std::runtime_error("unknown prefix in " + prefixed);
  }
  return it->second + prefixed.substr(colon + 1);
}

// Constant AST term to RDF; variables and blank nodes are handled by callers.
RdfTerm resolve(const Term& t, const Prefixes& prefixes) {
  switch (t.kind) {
    case Term::Kind::iri: return iri(t.value);
    case Term::Kind::prefixed_name: return iri(expand(t.value, prefixes));
    case Term::Kind::numeric: {
      const bool integral = t.value.find_first_of(".eE") == std::string::npos;
      const std::string v = !t.value.empty() && t.value[0] == '+' ? t.value.substr(1) : t.value;
      return literal(v, integral ? kInteger : t.value.find_first_of("eE") != std::string::npos ? kDouble : kDecimal);
    }
    case Term::Kind::boolean: return boolean(t.value == "true");
    case Term::Kind::literal: {
      const std::string& q = t.value;
      const bool longq = q.size() >= 6 && (q.rfind("\"\"\"", 0) == 0 || q.rfind("'''", 0) == 0);
      const size_t cut = longq ? 3 : 1;
      RdfTerm out = literal(unescape(std::string_view(q).substr(cut, q.size() - 2 * cut)));
      out.lang = t.lang;
      if (!t.datatype.empty()) {
        out.datatype = t.datatype.front() == '<' ? t.datatype.substr(1, t.datatype.size() - 2)
                                                 : expand(t.datatype, prefixes);
      }
      return out;
    }
    case Term::Kind::variable:
    case Term::Kind::blank_node: break;
  }
  throw std::logic_error("resolve: not a constant");
}

std::string pattern_var(const Term& t) {
  if (t.kind == Term::Kind::variable) return t.value;
  if (t.kind == Term::Kind::blank_node) return " bnode " + t.value;  // never projected
  return {};
}

// Ordering used by ORDER BY, MIN and MAX: unbound < blank < IRI < literal,
// numbers numerically, everything else by lexical form.
int compare_terms(const std::optional<RdfTerm>& a, const std::optional<RdfTerm>& b) {
  if (!a || !b) return static_cast<int>(a.has_value()) - static_cast<int>(b.has_value());
  auto rank = [](const RdfTerm& t) {
    return t.kind == RdfTerm::Kind::bnode ? 0 : t.kind == RdfTerm::Kind::iri ? 1 : 2;
  };
  if (rank(*a) != rank(*b)) return rank(*a) < rank(*b) ? -1 : 1;
  const auto na = numeric_value(*a), nb = numeric_value(*b);
  if (na && nb) return *na < *nb ? -1 : *na > *nb ? 1 : 0;
  const int c = a->value.compare(b->value);
  if (c != 0) return c < 0 ? -1 : 1;
  return a->datatype < b->datatype ? -1 : a->datatype > b->datatype ? 1 : 0;
}

std::optional<bool> effective_boolean(const std::optional<RdfTerm>& t) {
  if (!t || t->kind != RdfTerm::Kind::literal) return std::nullopt;
  if (t->datatype == kBoolean) return t->value == "true";
  if (auto n = numeric_value(*t)) return *n != 0;
  if (t->datatype.empty() || t->datatype == std::string(kXsd) + "string") return !t->value.empty();
  return std::nullopt;
}

class Evaluator {
 public:
  explicit Evaluator(const std::vector<RdfTriple>& triples) : triples_(triples) {}

  // Rows of projected variable values (nullopt = unbound).
  struct Table {
    std::vector<std::string> vars;
    std::vector<std::vector<std::optional<RdfTerm>>> rows;
  };

  Table run(const QueryAst& q, const Prefixes& outer) {
    Prefixes prefixes = outer;
    for (const auto& [p, v] : q.prefixes) prefixes[p] = v;
    const Solutions sols = eval_group(q.where, {Binding{}}, prefixes);

    bool grouped = !q.group_by.empty();
    for (const auto& item : q.projection) grouped = grouped || item.is_aggregate();
    for (const auto& o : q.order_by) grouped = grouped || sparql::contains_aggregate(o.expr);

    Table table;
    if (q.select_star) {
      std::vector<std::string> vars;
      collect_vars(q.where, vars);
      table.vars = vars;
    } else {
      for (const auto& item : q.projection) table.vars.push_back(item.var);
    }

    struct Row {
      Binding values;
      std::vector<std::optional<RdfTerm>> order_keys;
    };
    std::vector<Row> rows;

    auto finish_row = [&](Binding base, const Solutions& group) {
      for (const auto& item : q.projection) {
        if (!item.expr) continue;
        if (auto v = eval(*item.expr, base, prefixes, &group)) base[item.var] = *v;
      }
      Row row;
      for (const auto& o : q.order_by) row.order_keys.push_back(eval(o.expr, base, prefixes, &group));
      row.values = std::move(base);
      rows.push_back(std::move(row));
    };

    if (grouped) {
      std::map<std::vector<std::optional<RdfTerm>>, std::pair<Binding, Solutions>> groups;
      for (const auto& s : sols) {
        std::vector<std::optional<RdfTerm>> key;
        Binding base;
        for (const auto& g : q.group_by) {
          auto v = eval(g.expr, s, prefixes, nullptr);
          key.push_back(v);
          const std::string name = g.alias ? *g.alias
                                   : g.expr.kind == Expression::Kind::term && g.expr.term.is_variable()
                                       ? g.expr.term.value
                                       : std::string();
          if (!name.empty() && v) base[name] = *v;
        }
        auto& slot = groups[key];
        slot.first = base;
        slot.second.push_back(s);
      }
      if (groups.empty() && q.group_by.empty()) groups[{}];  // implicit group over no rows
      for (auto& [_, g] : groups) finish_row(g.first, g.second);
    } else {
      for (const auto& s : sols) finish_row(s, {});
    }

    if (!q.order_by.empty()) {
      std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
        for (size_t i = 0; i < q.order_by.size(); ++i) {
          const int c = compare_terms(a.order_keys[i], b.order_keys[i]);
          if (c != 0) return q.order_by[i].descending ? c > 0 : c < 0;
        }
        return false;
      });
    }

    std::set<std::vector<std::optional<RdfTerm>>> seen;
    for (const auto& row : rows) {
      std::vector<std::optional<RdfTerm>> out;
      for (const auto& v : table.vars) {
        auto it = row.values.find(v);
        out.push_back(it == row.values.end() ? std::nullopt : std::optional<RdfTerm>(it->second));
      }
      if (q.distinct && !seen.insert(out).second) continue;
      table.rows.push_back(std::move(out));
    }
    const size_t offset = std::min<size_t>(q.offset.value_or(0), table.rows.size());
    table.rows.erase(table.rows.begin(), table.rows.begin() + static_cast<std::ptrdiff_t>(offset));
    if (q.limit && table.rows.size() > *q.limit) table.rows.resize(*q.limit);
    return table;
  }

 private:
  static void collect_vars(const GraphPattern& p, std::vector<std::string>& out) {
    auto add = [&](const std::string& v) {
      if (!v.empty() && v[0] != ' ' && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    };
    for (const auto& el : p.elements) {
      if (auto* t = std::get_if<sparql::TriplePattern>(&el)) {
        add(pattern_var(t->subject));
        add(pattern_var(t->predicate));
        add(pattern_var(t->object));
      } else if (auto* o = std::get_if<sparql::OptionalElement>(&el)) {
        collect_vars(*o->pattern, out);
      } else if (auto* g = std::get_if<sparql::GroupElement>(&el)) {
        collect_vars(*g->pattern, out);
      } else if (auto* u = std::get_if<sparql::UnionElement>(&el)) {
        for (const auto& b : u->branches) collect_vars(*b, out);
      } else if (auto* s = std::get_if<sparql::SubSelectElement>(&el)) {
        if (s->query->select_star) {
          collect_vars(s->query->where, out);
        } else {
          for (const auto& item : s->query->projection) add(item.var);
        }
      } else if (auto* b = std::get_if<sparql::BindElement>(&el)) {
        add(b->var);
      }
    }
  }

  static bool compatible(const Binding& a, const Binding& b) {
    for (const auto& [k, v] : b) {
      auto it = a.find(k);
      if (it != a.end() && !(it->second == v)) return false;
    }
    return true;
  }

  Solutions match_triple(const sparql::TriplePattern& tp, const Solutions& in,
                         const Prefixes& prefixes) const {
    const std::array<const Term*, 3> parts = {&tp.subject, &tp.predicate, &tp.object};
    std::array<std::optional<RdfTerm>, 3> consts;
    std::array<std::string, 3> vars;
    for (size_t i = 0; i < 3; ++i) {
      vars[i] = pattern_var(*parts[i]);
      if (vars[i].empty()) consts[i] = resolve(*parts[i], prefixes);
    }
    Solutions out;
    for (const auto& mu : in) {
      for (const auto& tr : triples_) {
        const std::array<const RdfTerm*, 3> vals = {&tr.s, &tr.p, &tr.o};
        Binding ext = mu;
        bool ok = true;
        for (size_t i = 0; i < 3 && ok; ++i) {
          if (consts[i]) {
            ok = *consts[i] == *vals[i];
          } else if (auto it = ext.find(vars[i]); it != ext.end()) {
            ok = it->second == *vals[i];
          } else {
            ext[vars[i]] = *vals[i];
          }
        }
        if (ok) out.push_back(std::move(ext));
      }
    }
    return out;
  }

  Solutions eval_group(const GraphPattern& p, Solutions sols, const Prefixes& prefixes) {
    std::vector<const Expression*> filters;
    for (const auto& el : p.elements) {
      if (auto* t = std::get_if<sparql::TriplePattern>(&el)) {
        sols = match_triple(*t, sols, prefixes);
      } else if (auto* f = std::get_if<sparql::FilterElement>(&el)) {
        filters.push_back(&f->expr);
      } else if (auto* o = std::get_if<sparql::OptionalElement>(&el)) {
        Solutions next;
        for (const auto& mu : sols) {
          auto ext = eval_group(*o->pattern, {mu}, prefixes);
          if (ext.empty()) {
            next.push_back(mu);
          } else {
            next.insert(next.end(), ext.begin(), ext.end());
          }
        }
        sols = std::move(next);
      } else if (auto* g = std::get_if<sparql::GroupElement>(&el)) {
        sols = eval_group(*g->pattern, std::move(sols), prefixes);
      } else if (auto* u = std::get_if<sparql::UnionElement>(&el)) {
        Solutions next;
        for (const auto& branch : u->branches) {
          auto part = eval_group(*branch, sols, prefixes);
          next.insert(next.end(), part.begin(), part.end());
        }
        sols = std::move(next);
      } else if (auto* s = std::get_if<sparql::SubSelectElement>(&el)) {
        const Table sub = run(*s->query, prefixes);
        Solutions next;
        for (const auto& mu : sols) {
          for (const auto& row : sub.rows) {
            Binding b;
            for (size_t i = 0; i < sub.vars.size(); ++i) {
              if (row[i]) b[sub.vars[i]] = *row[i];
            }
            if (!compatible(mu, b)) continue;
            Binding merged = mu;
            merged.insert(b.begin(), b.end());
            next.push_back(std::move(merged));
          }
        }
        sols = std::move(next);
      } else if (auto* b = std::get_if<sparql::BindElement>(&el)) {
        for (auto& mu : sols) {
          if (auto v = eval(b->expr, mu, prefixes, nullptr)) mu[b->var] = *v;
        }
      }
    }
    std::erase_if(sols, [&](const Binding& mu) {
      for (const auto* f : filters) {
        if (effective_boolean(eval(*f, mu, prefixes, nullptr)) != true) return true;
      }
      return false;
    });
    return sols;
  }

  std::optional<RdfTerm> aggregate(const Expression& e, const Prefixes& prefixes,
                                   const Solutions& group) {
    std::vector<RdfTerm> values;
    if (e.star) {
      if (e.distinct) {
        std::set<Binding> uniq(group.begin(), group.end());
        return number(static_cast<double>(uniq.size()), true);
      }
      return number(static_cast<double>(group.size()), true);
    }
    for (const auto& mu : group) {
      if (auto v = eval(e.args.at(0), mu, prefixes, nullptr)) values.push_back(*v);
    }
    if (e.distinct) {
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
    }
    if (e.op == "COUNT") return number(static_cast<double>(values.size()), true);
    if (e.op == "MIN" || e.op == "MAX") {
      if (values.empty()) return std::nullopt;
      const bool want_min = e.op == "MIN";
      RdfTerm best = values[0];
      for (const auto& v : values) {
        const int c = compare_terms(v, best);
        if (want_min ? c < 0 : c > 0) best = v;
      }
      return best;
    }
    double sum = 0;
    bool integral = true;
    for (const auto& v : values) {
      auto n = numeric_value(v);
      if (!n) return std::nullopt;
      sum += *n;
      integral = integral && is_integral(v);
    }
    if (e.op == "SUM") return number(sum, integral);
    if (e.op == "AVG") {
      if (values.empty()) return number(0, true);
      return number(sum / static_cast<double>(values.size()), false);
    }
    return std::nullopt;
  }

  std::optional<RdfTerm> eval(const Expression& e, const Binding& mu, const Prefixes& prefixes,
                              const Solutions* group) {
    switch (e.kind) {
      case Expression::Kind::term: {
        if (e.term.is_variable()) {
          auto it = mu.find(e.term.value);
          if (it == mu.end()) return std::nullopt;
          return it->second;
        }
        if (e.term.kind == Term::Kind::blank_node) return std::nullopt;
        return resolve(e.term, prefixes);
      }
      case Expression::Kind::aggregate:
        if (!group) return std::nullopt;
        return aggregate(e, prefixes, *group);
      case Expression::Kind::unary: {
        auto v = eval(e.args.at(0), mu, prefixes, group);
        if (e.op == "!") {
          auto b = effective_boolean(v);
          if (!b) return std::nullopt;
          return boolean(!*b);
        }
        auto n = v ? numeric_value(*v) : std::nullopt;
        if (!n) return std::nullopt;
        return number(e.op == "-" ? -*n : *n, is_integral(*v));
      }
      case Expression::Kind::binary: return binary(e, mu, prefixes, group);
      case Expression::Kind::in_list: {
        auto lhs = eval(e.args.at(0), mu, prefixes, group);
        if (!lhs) return std::nullopt;
        bool found = false;
        for (size_t i = 1; i < e.args.size() && !found; ++i) {
          auto v = eval(e.args[i], mu, prefixes, group);
          found = v && equal_terms(*lhs, *v);
        }
        return boolean(e.op == "IN" ? found : !found);
      }
      case Expression::Kind::call: return call(e, mu, prefixes, group);
    }
    return std::nullopt;
  }

  static bool equal_terms(const RdfTerm& a, const RdfTerm& b) {
    const auto na = numeric_value(a), nb = numeric_value(b);
    if (na && nb) return *na == *nb;
    return a == b;
  }

  std::optional<RdfTerm> binary(const Expression& e, const Binding& mu, const Prefixes& prefixes,
                                const Solutions* group) {
    if (e.op == "||" || e.op == "&&") {
      auto l = effective_boolean(eval(e.args.at(0), mu, prefixes, group));
      auto r = effective_boolean(eval(e.args.at(1), mu, prefixes, group));
      if (e.op == "||") {
        if (l == true || r == true) return boolean(true);
        if (l && r) return boolean(false);
      } else {
        if (l == false || r == false) return boolean(false);
        if (l && r) return boolean(true);
      }
      return std::nullopt;
    }
    auto l = eval(e.args.at(0), mu, prefixes, group);
    auto r = eval(e.args.at(1), mu, prefixes, group);
    if (!l || !r) return std::nullopt;
    if (e.op == "=") return boolean(equal_terms(*l, *r));
    if (e.op == "!=") return boolean(!equal_terms(*l, *r));
    if (e.op == "<" || e.op == ">" || e.op == "<=" || e.op == ">=") {
      const int c = compare_terms(l, r);
      if (e.op == "<") return boolean(c < 0);
      if (e.op == ">") return boolean(c > 0);
      if (e.op == "<=") return boolean(c <= 0);
      return boolean(c >= 0);
    }
    auto a = numeric_value(*l), b = numeric_value(*r);
    if (!a || !b) return std::nullopt;
    const bool integral = is_integral(*l) && is_integral(*r);
    if (e.op == "+") return number(*a + *b, integral);
    if (e.op == "-") return number(*a - *b, integral);
    if (e.op == "*") return number(*a * *b, integral);
    if (e.op == "/") {
      if (*b == 0) return std::nullopt;
      return number(*a / *b, false);
    }
    return std::nullopt;
  }

  std::optional<RdfTerm> call(const Expression& e, const Binding& mu, const Prefixes& prefixes,
                              const Solutions* group) {
    const std::string& f = e.op;
    if (f == "BOUND") {
      const auto& a = e.args.at(0);
      return boolean(a.term.is_variable() && mu.count(a.term.value) > 0);
    }
    if (f == "COALESCE") {
      for (const auto& a : e.args) {
        if (auto v = eval(a, mu, prefixes, group)) return v;
      }
      return std::nullopt;
    }
    if (f == "IF") {
      auto c = effective_boolean(eval(e.args.at(0), mu, prefixes, group));
      if (!c) return std::nullopt;
      return eval(e.args.at(*c ? 1 : 2), mu, prefixes, group);
    }
    std::vector<std::optional<RdfTerm>> args;
    for (const auto& a : e.args) args.push_back(eval(a, mu, prefixes, group));
    for (const auto& a : args) {
      if (!a) return std::nullopt;
    }
    auto str_of = [](const RdfTerm& t) { return t.value; };
    if (f == "STR") return literal(str_of(*args.at(0)));
    if (f == "LANG") return literal(args.at(0)->lang);
    if (f == "DATATYPE") {
      const auto& t = *args.at(0);
      if (t.kind != RdfTerm::Kind::literal) return std::nullopt;
      return iri(t.datatype.empty() ? std::string(kXsd) + "string" : t.datatype);
    }
    if (f == "ISIRI" || f == "ISURI") return boolean(args.at(0)->kind == RdfTerm::Kind::iri);
    if (f == "ISLITERAL") return boolean(args.at(0)->kind == RdfTerm::Kind::literal);
    if (f == "ISBLANK") return boolean(args.at(0)->kind == RdfTerm::Kind::bnode);
    if (f == "ISNUMERIC") return boolean(numeric_value(*args.at(0)).has_value());
    if (f == "LCASE") return literal(to_lower(args.at(0)->value));
    if (f == "UCASE") return literal(to_upper(args.at(0)->value));
    if (f == "STRLEN") return number(static_cast<double>(args.at(0)->value.size()), true);
    if (f == "CONTAINS") return boolean(args.at(0)->value.find(args.at(1)->value) != std::string::npos);
    if (f == "STRSTARTS") return boolean(args.at(0)->value.rfind(args.at(1)->value, 0) == 0);
    if (f == "STRENDS") {
      const auto& s = args.at(0)->value;
      const auto& x = args.at(1)->value;
      return boolean(s.size() >= x.size() && s.compare(s.size() - x.size(), x.size(), x) == 0);
    }
    if (f == "LANGMATCHES") {
      const auto tag = to_lower(args.at(0)->value), range = to_lower(args.at(1)->value);
      return boolean(range == "*" ? !tag.empty() : tag == range || tag.rfind(range + "-", 0) == 0);
    }
    if (f == "REGEX") {
      auto flags = std::regex::ECMAScript;
      if (args.size() > 2 && args[2]->value.find('i') != std::string::npos) flags |= std::regex::icase;
      try {
        return boolean(std::regex_search(args.at(0)->value, std::regex(args.at(1)->value, flags)));
      } catch (const std::regex_error&) {
        return std::nullopt;
      }
    }
    if (f == "ABS" || f == "ROUND" || f == "CEIL" || f == "FLOOR") {
      auto n = numeric_value(*args.at(0));
      if (!n) return std::nullopt;
      const double v = f == "ABS" ? std::fabs(*n) : f == "ROUND" ? std::round(*n)
                       : f == "CEIL" ? std::ceil(*n) : std::floor(*n);
      return number(v, is_integral(*args.at(0)));
    }
    if (f == "YEAR") {
      const auto& s = args.at(0)->value;
      if (s.size() < 4) return std::nullopt;
      return literal(std::to_string(std::stoi(s.substr(0, 4))), kInteger);
    }
    if (f == "CONCAT") {
      std::string out;
      for (const auto& a : args) out += a->value;
      return literal(out);
    }
    return std::nullopt;
  }

  const std::vector<RdfTriple>& triples_;
};

// QLever-style exception text for the first diagnostic.
std::string engine_message(const sparql::Diagnostic& d) {
  switch (d.code) {
    case sparql::DiagnosticCode::AggregationUngroupedVar:
      return "Invalid SPARQL query: " + d.message +
             ". Variables that are selected but not aggregated must appear in the GROUP BY clause";
    case sparql::DiagnosticCode::MalformedSubquery:
      return "Invalid SPARQL query: Token \"SELECT\": mismatched input 'SELECT' expecting '}'";
    default: return "Invalid SPARQL query: " + d.message;
  }
}

json binding_json(const RdfTerm& t) {
  switch (t.kind) {
    case RdfTerm::Kind::iri: return {{"type", "uri"}, {"value", t.value}};
    case RdfTerm::Kind::bnode: return {{"type", "bnode"}, {"value", t.value}};
    case RdfTerm::Kind::literal: {
      json j = {{"type", "literal"}, {"value", t.value}};
      if (!t.lang.empty()) {
        j["xml:lang"] = t.lang;
      } else if (!t.datatype.empty()) {
        j["datatype"] = t.datatype;
      }
      return j;
    }
  }
  return {};
}

// N-Triples term at s[i]; advances i.
RdfTerm parse_nt_term(std::string_view s, size_t& i, size_t line) {
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("N-Triples line " + std::to_string(line) + ": " + what);
  };
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  if (i >= s.size()) fail("unexpected end of line");
  if (s[i] == '<') {
    const size_t end = s.find('>', i);
    if (end == std::string_view::npos) fail("unterminated IRI");
    RdfTerm t = iri(std::string(s.substr(i + 1, end - i - 1)));
    i = end + 1;
    return t;
  }
  if (s.substr(i, 2) == "_:") {
    size_t j = i + 2;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    RdfTerm t{RdfTerm::Kind::bnode, std::string(s.substr(i + 2, j - i - 2)), {}, {}};
    i = j;
    return t;
  }
  if (s[i] == '"') {
    size_t j = i + 1;
    while (j < s.size() && s[j] != '"') j += s[j] == '\\' ? 2 : 1;
    if (j >= s.size()) fail("unterminated literal");
    RdfTerm t = literal(unescape(s.substr(i + 1, j - i - 1)));
    i = j + 1;
    if (i < s.size() && s[i] == '@') {
      size_t k = i + 1;
      while (k < s.size() && s[k] != ' ' && s[k] != '\t') ++k;
      t.lang = std::string(s.substr(i + 1, k - i - 1));
      i = k;
    } else if (s.substr(i, 3) == "^^<") {
      const size_t end = s.find('>', i);
      if (end == std::string_view::npos) fail("unterminated datatype");
      t.datatype = std::string(s.substr(i + 3, end - i - 3));
      i = end + 1;
    }
    return t;
  }
  fail("unexpected character '" + std::string(1, s[i]) + "'");
  return {};
}

}  // namespace

std::string format_term(const RdfTerm& t) {
  switch (t.kind) {
    case RdfTerm::Kind::iri: return "<" + t.value + ">";
    case RdfTerm::Kind::bnode: return "_:" + t.value;
    case RdfTerm::Kind::literal: {
      std::string out = "\"" + escape(t.value) + "\"";
      if (!t.lang.empty()) return out + "@" + t.lang;
      if (!t.datatype.empty()) return out + "^^<" + t.datatype + ">";
      return out;
    }
  }
  return {};
}

FixtureStore::FixtureStore(std::vector<RdfTriple> triples) : triples_(std::move(triples)) {}

FixtureStore FixtureStore::from_ntriples(std::string_view text) {
  std::vector<RdfTriple> triples;
  size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t i = 0;
    RdfTriple t;
    t.s = parse_nt_term(line, i, line_no);
    t.p = parse_nt_term(line, i, line_no);
    t.o = parse_nt_term(line, i, line_no);
    if (trim(line.substr(i)) != ".") {
      throw std::runtime_error("N-Triples line " + std::to_string(line_no) + ": expected '.'");
    }
    triples.push_back(std::move(t));
  }
  return FixtureStore(std::move(triples));
}

ResultTable FixtureStore::evaluate(const QueryAst& query, bool strict) const {
  Evaluator ev(triples_);
  const auto table = ev.run(query, {});
  ResultTable out;
  out.vars = table.vars;
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (const auto& cell : row) {
      cells.push_back(!cell ? std::string() : strict ? format_term(*cell) : cell->value);
    }
    out.rows.push_back(std::move(cells));
  }
  return out;
}

FixtureStore::Answer FixtureStore::answer(const std::string& query, bool tsv) const {
  const auto check = sparql::check_query(query);
  if (!check.valid()) {
    const json body = {{"query", query},
                       {"status", "ERROR"},
                       {"exception", engine_message(check.diagnostics.at(0))}};
    return {400, body.dump(), "application/json"};
  }
  Evaluator ev(triples_);
  Evaluator::Table table;
  try {
    table = ev.run(*check.ast, {});
  } catch (const std::exception& e) {
    const json body = {{"query", query}, {"status", "ERROR"}, {"exception", e.what()}};
    return {400, body.dump(), "application/json"};
  }
  if (tsv) {
    std::string out;
    for (size_t i = 0; i < table.vars.size(); ++i) out += (i ? "\t?" : "?") + table.vars[i];
    out += "\n";
    for (const auto& row : table.rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) out += "\t";
        if (row[i]) out += format_term(*row[i]);
      }
      out += "\n";
    }
    return {200, out, "text/tab-separated-values"};
  }
  json bindings = json::array();
  for (const auto& row : table.rows) {
    json b = json::object();
    for (size_t i = 0; i < row.size(); ++i) {
      if (row[i]) b[table.vars[i]] = binding_json(*row[i]);
    }
    bindings.push_back(std::move(b));
  }
  const json body = {{"head", {{"vars", table.vars}}}, {"results", {{"bindings", bindings}}}};
  return {200, body.dump(), "application/sparql-results+json"};
}

FixtureServer::FixtureServer(std::shared_ptr<const FixtureStore> store)
    : store_(std::move(store)), server_(std::make_unique<httplib::Server>()) {
  auto handle = [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    std::string query;
    if (req.has_param("query")) {
      query = req.get_param_value("query");
    } else {
      query = req.body;
    }
    {
      std::lock_guard lock(mu_);
      queries_.push_back(query);
    }
    const bool tsv = req.get_header_value("Accept").find("tab-separated") != std::string::npos;
    const auto answer = store_->answer(query, tsv);
    res.status = answer.status;
    res.set_content(answer.body, answer.content_type);
  };
  server_->Post("/sparql", handle);
  server_->Get("/sparql", handle);
  // One request per connection, so stop() never waits on an idle keep-alive.
  server_->set_keep_alive_max_count(1);
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("fixture server: cannot bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FixtureServer::~FixtureServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

ExecutionOutcome StoreExecutor::execute(const std::string& query) {
  ++calls_;
  const auto a = store_->answer(query, options_.format == ResultFormat::tsv);
  return decode_response(a.status, a.body, a.content_type, options_);
}

std::string FixtureServer::url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/sparql";
}

std::vector<std::string> FixtureServer::received_queries() const {
  std::lock_guard lock(mu_);
  return queries_;
}

}  // namespace sparqlgen::testing
