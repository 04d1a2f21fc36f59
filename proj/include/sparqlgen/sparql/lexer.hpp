#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sparqlgen::sparql {

// Stable codes; their names are used as report keys.
enum class DiagnosticCode {
  AggregationUngroupedVar,
  MalformedSubquery,
  UnknownPrefix,
  GeneralSyntax,
  UnsupportedForm,
};

const char* to_string(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code = DiagnosticCode::GeneralSyntax;
  std::string message;
  std::optional<size_t> offset;

  bool operator==(const Diagnostic&) const = default;
};

enum class TokenKind {
  keyword,
  variable,
  iri,
  prefixed_name,
  string_literal,
  numeric_literal,
  punct,
  eof,
};

const char* to_string(TokenKind kind);

// `text` is the exact source slice, so concatenating all token texts and the
// skipped whitespace/comments reproduces the input.
struct Token {
  TokenKind kind = TokenKind::eof;
  std::string text;
  size_t offset = 0;

  bool operator==(const Token&) const = default;
};

// Bare words (SELECT, a, true, regex, ...) are keywords; keyword matching in
// the parser is case-insensitive. String literal tokens include their quotes
// and any @language tag. '#' comments are skipped.
std::variant<std::vector<Token>, Diagnostic> tokenize(std::string_view text);

}  // namespace sparqlgen::sparql
