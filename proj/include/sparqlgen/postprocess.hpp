#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparqlgen/prompting.hpp"
#include "sparqlgen/sparql/lexer.hpp"

namespace sparqlgen {

// Pulls the query out of free-form model output: the first fenced code block
// that mentions SELECT or PREFIX, otherwise the span from the first
// SELECT/PREFIX keyword through the last '}' plus any trailing solution
// modifiers. Throws NoQueryFound when neither keyword occurs.
std::string extract_query(std::string_view raw);

// Rule ids, applied in this order:
//   r1 CRLF / CR line endings to LF
//   r2 strip backticks or quotes wrapping the whole text
//   r3 separate glued variables (?a?b -> ?a ?b)
//   r4 space before '{' and after '}' when glued to a word
//   r5 drop trailing ';' or '.' after the last clause
//   r6 collapse runs of blank lines
struct CleaningReport {
  std::string input;
  std::string output;
  std::vector<std::string> rules_applied;
  bool changed = false;
};

// Purely lexical and idempotent. Strings, IRIs and comments are left alone.
CleaningReport clean(std::string_view query);

// Renders diagnostics one per line as "Code: message".
std::string format_diagnostics(const std::vector<sparql::Diagnostic>& diagnostics);

PromptInstance build_correction_prompt(std::string_view query,
                                       const std::vector<sparql::Diagnostic>& diagnostics,
                                       const PromptTemplates& templates = PromptTemplates::defaults());

struct CorrectionResult {
  std::string query;  // corrected query, or the input when the attempt failed
  bool corrected = false;
  std::optional<std::string> failure;
};

// Returns the raw model output for a prompt.
using Generator = std::function<std::string(const PromptInstance&)>;

// One correction round. Requires a query that fails parse or validation and
// at least one diagnostic (PreconditionError otherwise). The reply is extracted, cleaned
// and re-validated; an unusable reply keeps the original query.
CorrectionResult llm_correct(std::string_view query,
                             const std::vector<sparql::Diagnostic>& diagnostics,
                             const Generator& generator,
                             const PromptTemplates& templates = PromptTemplates::defaults());

}  // namespace sparqlgen
