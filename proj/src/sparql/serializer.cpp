#include "sparqlgen/sparql/serializer.hpp"

#include <sstream>

namespace sparqlgen::sparql {

std::string to_text(const Term& term) {
  switch (term.kind) {
    case Term::Kind::variable:
      return "?" + term.value;
    case Term::Kind::iri:
      return "<" + term.value + ">";
    case Term::Kind::literal: {
      std::string out = term.value;
      if (!term.lang.empty()) out += "@" + term.lang;
      if (!term.datatype.empty()) out += "^^" + term.datatype;
      return out;
    }
    case Term::Kind::prefixed_name:
    case Term::Kind::blank_node:
    case Term::Kind::numeric:
    case Term::Kind::boolean:
      return term.value;
  }
  return term.value;
}

namespace {

std::string wrap(const Expression& e) {
  const bool compound =
      e.kind == Expression::Kind::binary || e.kind == Expression::Kind::in_list;
  return compound ? "(" + serialize(e) + ")" : serialize(e);
}

std::string join_args(const std::vector<Expression>& args, size_t from = 0) {
  std::string out;
  for (size_t i = from; i < args.size(); ++i) {
    if (i > from) out += ", ";
    out += serialize(args[i]);
  }
  return out;
}

class Writer {
 public:
  std::string finish() { return out_.str(); }

  void query(const QueryAst& q, int depth) {
    for (const auto& [prefix, iri] : q.prefixes) {
      line(depth, "PREFIX " + prefix + ": <" + iri + ">");
    }
    std::string select = "SELECT";
    if (q.distinct) select += " DISTINCT";
    if (q.select_star) select += " *";
    for (const auto& item : q.projection) {
      if (item.expr) {
        select += " (" + serialize(*item.expr) + " AS ?" + item.var + ")";
      } else {
        select += " ?" + item.var;
      }
    }
    line(depth, select);
    line(depth, "WHERE {");
    pattern(q.where, depth + 1);
    line(depth, "}");
    if (!q.group_by.empty()) {
      std::string g = "GROUP BY";
      for (const auto& c : q.group_by) {
        if (c.alias) {
          g += " (" + serialize(c.expr) + " AS ?" + *c.alias + ")";
        } else if (c.expr.kind == Expression::Kind::term) {
          g += " " + serialize(c.expr);
        } else {
          g += " (" + serialize(c.expr) + ")";
        }
      }
      line(depth, g);
    }
    if (!q.order_by.empty()) {
      std::string o = "ORDER BY";
      for (const auto& c : q.order_by) {
        if (c.descending) {
          o += " DESC(" + serialize(c.expr) + ")";
        } else if (c.expr.kind == Expression::Kind::term && c.expr.term.is_variable()) {
          o += " " + serialize(c.expr);
        } else {
          o += " ASC(" + serialize(c.expr) + ")";
        }
      }
      line(depth, o);
    }
    if (q.limit) line(depth, "LIMIT " + std::to_string(*q.limit));
    if (q.offset) line(depth, "OFFSET " + std::to_string(*q.offset));
  }

 private:
  void line(int depth, const std::string& text) {
    out_ << std::string(static_cast<size_t>(depth) * 2, ' ') << text << '\n';
  }

  void block(const GraphPattern& gp, int depth, const std::string& open) {
    line(depth, open);
    pattern(gp, depth + 1);
    line(depth, "}");
  }

  void pattern(const GraphPattern& gp, int depth) {
    for (const auto& el : gp.elements) element(el, depth);
  }

  void element(const PatternElement& el, int depth) {
    if (const auto* t = std::get_if<TriplePattern>(&el)) {
      const bool is_type = t->predicate.kind == Term::Kind::iri && t->predicate.value == kRdfType;
      line(depth, to_text(t->subject) + " " + (is_type ? std::string("a") : to_text(t->predicate)) +
                      " " + to_text(t->object) + " .");
    } else if (const auto* f = std::get_if<FilterElement>(&el)) {
      line(depth, "FILTER(" + serialize(f->expr) + ")");
    } else if (const auto* b = std::get_if<BindElement>(&el)) {
      line(depth, "BIND(" + serialize(b->expr) + " AS ?" + b->var + ")");
    } else if (const auto* o = std::get_if<OptionalElement>(&el)) {
      block(*o->pattern, depth, "OPTIONAL {");
    } else if (const auto* g = std::get_if<GroupElement>(&el)) {
      block(*g->pattern, depth, "{");
    } else if (const auto* u = std::get_if<UnionElement>(&el)) {
      for (size_t i = 0; i < u->branches.size(); ++i) {
        line(depth, i == 0 ? "{" : "} UNION {");
        pattern(*u->branches[i], depth + 1);
      }
      line(depth, "}");
    } else if (const auto* s = std::get_if<SubSelectElement>(&el)) {
      line(depth, "{");
      query(*s->query, depth + 1);
      line(depth, "}");
    }
  }

  std::ostringstream out_;
};

}  // namespace

std::string serialize(const Expression& e) {
  switch (e.kind) {
    case Expression::Kind::term:
      return to_text(e.term);
    case Expression::Kind::unary:
      return e.op + wrap(e.args.at(0));
    case Expression::Kind::binary:
      return wrap(e.args.at(0)) + " " + e.op + " " + wrap(e.args.at(1));
    case Expression::Kind::call:
      return e.op + "(" + join_args(e.args) + ")";
    case Expression::Kind::aggregate: {
      std::string inner = e.distinct ? "DISTINCT " : "";
      inner += e.star ? "*" : join_args(e.args);
      return e.op + "(" + inner + ")";
    }
    case Expression::Kind::in_list:
      return wrap(e.args.at(0)) + " " + e.op + " (" + join_args(e.args, 1) + ")";
  }
  return {};
}

std::string serialize(const QueryAst& ast) {
  Writer w;
  w.query(ast, 0);
  return w.finish();
}

}  // namespace sparqlgen::sparql
