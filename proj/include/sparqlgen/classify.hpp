#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sparqlgen/execution.hpp"
#include "sparqlgen/sparql/ast.hpp"
#include "sparqlgen/sparql/lexer.hpp"

namespace sparqlgen {

enum class ErrorCategory {
  SyntaxAggregation,
  SyntaxSubquery,
  SyntaxOther,
  EmptyResult,
  SemanticInaccuracy,
  StructuralInconsistency,
  Correct,
};

inline constexpr std::array<ErrorCategory, 7> kAllCategories = {
    ErrorCategory::SyntaxAggregation,  ErrorCategory::SyntaxSubquery,
    ErrorCategory::SyntaxOther,        ErrorCategory::EmptyResult,
    ErrorCategory::SemanticInaccuracy, ErrorCategory::StructuralInconsistency,
    ErrorCategory::Correct,
};

const char* to_string(ErrorCategory c);
std::optional<ErrorCategory> parse_error_category(std::string_view s);

// Everything known about one generated query once the pipeline is done with it.
struct ItemEvidence {
  bool checked = false;  // local parse + validation ran
  std::vector<sparql::Diagnostic> diagnostics;
  std::optional<sparql::QueryAst> ast;  // set iff parsing succeeded
  std::optional<ExecutionOutcome> execution;
  std::optional<bool> match;  // set iff execution returned rows
};

struct Classification {
  ErrorCategory category = ErrorCategory::SyntaxOther;
  std::string message;
};

// First matching rule wins: aggregation diagnostic, subquery diagnostic, any
// other local or endpoint-side syntax failure, empty result, match, then
// semantic versus structural mismatch via structural_diff against `gold`.
// Throws IncompleteBundle when a required stage is missing.
Classification classify(const ItemEvidence& evidence, const sparql::QueryAst* gold);

struct StructuralDiff {
  bool isomorphic = false;
  int triple_count_delta = 0;  // generated minus gold
  // (gold constant, generated constant) pairs matched by position under the
  // best variable mapping; empty when not isomorphic.
  std::vector<std::pair<std::string, std::string>> differing_constants;
};

// Compares the triple-pattern multigraphs of two queries. Variables (and
// blank nodes) may be renamed bijectively; constants match any constant but
// the mapping that minimises differing constants is reported. Above
// kExactDiffLimit triples only degree sequences are compared.
StructuralDiff structural_diff(const sparql::QueryAst& generated, const sparql::QueryAst& gold);

inline constexpr size_t kExactDiffLimit = 12;

}  // namespace sparqlgen
