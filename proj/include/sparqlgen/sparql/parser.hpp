#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "sparqlgen/sparql/ast.hpp"
#include "sparqlgen/sparql/lexer.hpp"

namespace sparqlgen::sparql {

using ParseResult = std::variant<QueryAst, std::vector<Diagnostic>>;

// Parses the supported SELECT subset. On failure the diagnostics are sorted
// by offset, so the first one is the earliest error. ASK, CONSTRUCT,
// DESCRIBE, updates and constructs outside the subset yield UnsupportedForm;
// a SELECT that is not the sole content of its own group yields
// MalformedSubquery.
ParseResult parse(std::string_view text);

inline bool ok(const ParseResult& r) { return std::holds_alternative<QueryAst>(r); }
inline const QueryAst& ast(const ParseResult& r) { return std::get<QueryAst>(r); }
inline const std::vector<Diagnostic>& diagnostics(const ParseResult& r) {
  return std::get<std::vector<Diagnostic>>(r);
}

}  // namespace sparqlgen::sparql
