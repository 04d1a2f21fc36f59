#pragma once

#include <string>

#include "sparqlgen/sparql/ast.hpp"

namespace sparqlgen::sparql {

// Canonical text: one PREFIX per line, single spaces between tokens, one
// pattern element per line, two-space indent per nesting level. Triple
// abbreviations are expanded. parse(serialize(q)) == q.
std::string serialize(const QueryAst& ast);

std::string serialize(const Expression& expr);

}  // namespace sparqlgen::sparql
