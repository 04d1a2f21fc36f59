#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "sparqlgen/sparql/ast.hpp"
#include "sparqlgen/sparql/lexer.hpp"

namespace sparqlgen::sparql {

// One AggregationUngroupedVar per projected plain variable that is missing
// from GROUP BY while the projection uses an aggregate (explicit or implicit
// grouping). Recurses into subqueries.
std::vector<Diagnostic> validate_aggregation(const QueryAst& ast);

enum class ScopeKind { required, optional, union_branch, subselect };

const char* to_string(ScopeKind kind);

struct ScopedTriple {
  TriplePattern triple;
  ScopeKind scope = ScopeKind::required;  // innermost enclosing scope
  int depth = 0;                          // number of enclosing groups

  bool operator==(const ScopedTriple&) const = default;
};

// Depth-first, in source order, across every nested scope.
std::vector<ScopedTriple> extract_triple_patterns(const QueryAst& ast);

// Parse plus validate_aggregation. `ast` is set whenever parsing succeeded;
// the query is usable iff `diagnostics` is empty.
struct QueryCheck {
  std::optional<QueryAst> ast;
  std::vector<Diagnostic> diagnostics;

  bool valid() const { return ast.has_value() && diagnostics.empty(); }
};

QueryCheck check_query(std::string_view text);

}  // namespace sparqlgen::sparql
