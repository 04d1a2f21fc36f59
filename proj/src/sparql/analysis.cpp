#include "sparqlgen/sparql/analysis.hpp"

#include <set>

#include "sparqlgen/sparql/parser.hpp"

namespace sparqlgen::sparql {

const char* to_string(ScopeKind kind) {
  switch (kind) {
    case ScopeKind::required: return "required";
    case ScopeKind::optional: return "optional";
    case ScopeKind::union_branch: return "union";
    case ScopeKind::subselect: return "subselect";
  }
  return "required";
}

namespace {

template <typename Fn>
void for_each_subquery(const GraphPattern& gp, Fn&& fn) {
  for (const auto& el : gp.elements) {
    if (const auto* o = std::get_if<OptionalElement>(&el)) {
      for_each_subquery(*o->pattern, fn);
    } else if (const auto* g = std::get_if<GroupElement>(&el)) {
      for_each_subquery(*g->pattern, fn);
    } else if (const auto* u = std::get_if<UnionElement>(&el)) {
      for (const auto& b : u->branches) for_each_subquery(*b, fn);
    } else if (const auto* s = std::get_if<SubSelectElement>(&el)) {
      fn(*s->query);
    }
  }
}

void check_aggregation(const QueryAst& q, std::vector<Diagnostic>& out) {
  bool has_aggregate = false;
  for (const auto& item : q.projection) has_aggregate = has_aggregate || item.is_aggregate();
  if (has_aggregate) {
    std::set<std::string> grouped;
    for (const auto& c : q.group_by) {
      if (c.alias) grouped.insert(*c.alias);
      if (c.expr.kind == Expression::Kind::term && c.expr.term.is_variable()) {
        grouped.insert(c.expr.term.value);
      }
    }
    for (const auto& item : q.projection) {
      if (item.expr || grouped.count(item.var)) continue;
      std::string msg = "Variable ?" + item.var +
                        " is selected but not aggregated. All non-aggregated variables must be "
                        "part of the GROUP BY clause.";
      if (q.group_by.empty()) {
        msg += " Note: The GROUP BY in this query is implicit because an aggregate expression "
               "was used in the SELECT clause.";
      }
      out.push_back(Diagnostic{DiagnosticCode::AggregationUngroupedVar, std::move(msg), std::nullopt});
    }
  }
  for_each_subquery(q.where, [&](const QueryAst& sub) { check_aggregation(sub, out); });
}

void collect(const GraphPattern& gp, ScopeKind scope, int depth, std::vector<ScopedTriple>& out) {
  for (const auto& el : gp.elements) {
    if (const auto* t = std::get_if<TriplePattern>(&el)) {
      out.push_back(ScopedTriple{*t, scope, depth});
    } else if (const auto* o = std::get_if<OptionalElement>(&el)) {
      collect(*o->pattern, ScopeKind::optional, depth + 1, out);
    } else if (const auto* g = std::get_if<GroupElement>(&el)) {
      collect(*g->pattern, scope, depth + 1, out);
    } else if (const auto* u = std::get_if<UnionElement>(&el)) {
      for (const auto& b : u->branches) collect(*b, ScopeKind::union_branch, depth + 1, out);
    } else if (const auto* s = std::get_if<SubSelectElement>(&el)) {
      collect(s->query->where, ScopeKind::subselect, depth + 1, out);
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate_aggregation(const QueryAst& ast) {
  std::vector<Diagnostic> out;
  check_aggregation(ast, out);
  return out;
}

std::vector<ScopedTriple> extract_triple_patterns(const QueryAst& ast) {
  std::vector<ScopedTriple> out;
  collect(ast.where, ScopeKind::required, 0, out);
  return out;
}

QueryCheck check_query(std::string_view text) {
  QueryCheck out;
  auto parsed = parse(text);
  if (!ok(parsed)) {
    out.diagnostics = std::move(std::get<std::vector<Diagnostic>>(parsed));
    return out;
  }
  out.ast = std::move(std::get<QueryAst>(parsed));
  out.diagnostics = validate_aggregation(*out.ast);
  return out;
}

}  // namespace sparqlgen::sparql
