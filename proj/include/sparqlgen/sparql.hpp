#pragma once

#include "sparqlgen/sparql/analysis.hpp"
#include "sparqlgen/sparql/ast.hpp"
#include "sparqlgen/sparql/lexer.hpp"
#include "sparqlgen/sparql/parser.hpp"
#include "sparqlgen/sparql/serializer.hpp"
