#include "sparqlgen/sparql/lexer.hpp"

#include <cctype>

namespace sparqlgen::sparql {

const char* to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::AggregationUngroupedVar: return "AggregationUngroupedVar";
    case DiagnosticCode::MalformedSubquery: return "MalformedSubquery";
    case DiagnosticCode::UnknownPrefix: return "UnknownPrefix";
    case DiagnosticCode::GeneralSyntax: return "GeneralSyntax";
    case DiagnosticCode::UnsupportedForm: return "UnsupportedForm";
  }
  return "GeneralSyntax";
}

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::keyword: return "keyword";
    case TokenKind::variable: return "variable";
    case TokenKind::iri: return "iri";
    case TokenKind::prefixed_name: return "prefixed_name";
    case TokenKind::string_literal: return "string_literal";
    case TokenKind::numeric_literal: return "numeric_literal";
    case TokenKind::punct: return "punct";
    case TokenKind::eof: return "eof";
  }
  return "eof";
}

namespace {

bool is_name_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || u >= 0x80;
}

bool is_name_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-' || u >= 0x80;
}

bool is_var_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

bool is_iri_forbidden(char c) {
  auto u = static_cast<unsigned char>(c);
  return u <= 0x20 || c == '<' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' ||
         c == '`' || c == '\\';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : s_(text) {}

  std::variant<std::vector<Token>, Diagnostic> run() {
    while (true) {
      skip_space_and_comments();
      if (pos_ >= s_.size()) break;
      if (auto err = next_token()) return *err;
    }
    tokens_.push_back(Token{TokenKind::eof, "", s_.size()});
    return std::move(tokens_);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void emit(TokenKind kind, size_t start, size_t end) {
    tokens_.push_back(Token{kind, std::string(s_.substr(start, end - start)), start});
    pos_ = end;
  }

  char at(size_t i) const { return i < s_.size() ? s_[i] : '\0'; }

  static Diagnostic error(std::string message, size_t offset) {
    return Diagnostic{DiagnosticCode::GeneralSyntax, std::move(message), offset};
  }

  std::optional<Diagnostic> next_token() {
    const size_t start = pos_;
    const char c = s_[pos_];

    if ((c == '?' || c == '$') && is_var_char(at(pos_ + 1))) {
      size_t j = pos_ + 1;
      while (j < s_.size() && is_var_char(s_[j])) ++j;
      emit(TokenKind::variable, start, j);
      return std::nullopt;
    }
    if (c == '<') return lex_iri_or_less();
    if (c == '"' || c == '\'') return lex_string();
    if (is_digit(c) || (c == '.' && is_digit(at(pos_ + 1)))) {
      lex_number();
      return std::nullopt;
    }
    if (is_name_start(c) || c == ':') {
      lex_word();
      return std::nullopt;
    }

    static constexpr std::string_view kTwo[] = {"^^", "&&", "||", "!=", ">="};
    for (auto two : kTwo) {
      if (s_.substr(pos_, 2) == two) {
        emit(TokenKind::punct, start, pos_ + 2);
        return std::nullopt;
      }
    }
    static constexpr std::string_view kOne = "{}().,;*=>!+-/^|[]?";
    if (kOne.find(c) != std::string_view::npos) {
      emit(TokenKind::punct, start, pos_ + 1);
      return std::nullopt;
    }
    return error(std::string("unexpected character '") + c + "'", start);
  }

  std::optional<Diagnostic> lex_iri_or_less() {
    const size_t start = pos_;
    size_t j = pos_ + 1;
    bool has_colon = false;
    while (j < s_.size() && s_[j] != '>' && !is_iri_forbidden(s_[j])) {
      has_colon = has_colon || s_[j] == ':';
      ++j;
    }
    if (j < s_.size() && s_[j] == '>') {
      emit(TokenKind::iri, start, j + 1);
      return std::nullopt;
    }
    if (j >= s_.size() && has_colon) return error("unterminated IRI", start);
    emit(TokenKind::punct, start, at(pos_ + 1) == '=' ? pos_ + 2 : pos_ + 1);
    return std::nullopt;
  }

  std::optional<Diagnostic> lex_string() {
    const size_t start = pos_;
    const char q = s_[pos_];
    const std::string triple(3, q);
    size_t j;
    if (s_.substr(pos_, 3) == triple) {
      j = pos_ + 3;
      while (true) {
        if (j >= s_.size()) return error("unterminated string literal", start);
        if (s_[j] == '\\') {
          j += 2;
          continue;
        }
        if (s_.substr(j, 3) == triple) {
          j += 3;
          break;
        }
        ++j;
      }
    } else {
      j = pos_ + 1;
      while (true) {
        if (j >= s_.size() || s_[j] == '\n' || s_[j] == '\r') {
          return error("unterminated string literal", start);
        }
        if (s_[j] == '\\') {
          j += 2;
          continue;
        }
        if (s_[j] == q) {
          ++j;
          break;
        }
        ++j;
      }
    }
    if (at(j) == '@' && std::isalpha(static_cast<unsigned char>(at(j + 1)))) {
      ++j;
      while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '-')) ++j;
    }
    emit(TokenKind::string_literal, start, j);
    return std::nullopt;
  }

  void lex_number() {
    size_t j = pos_;
    while (is_digit(at(j))) ++j;
    if (at(j) == '.' && is_digit(at(j + 1))) {
      ++j;
      while (is_digit(at(j))) ++j;
    }
    if ((at(j) == 'e' || at(j) == 'E') &&
        (is_digit(at(j + 1)) || ((at(j + 1) == '+' || at(j + 1) == '-') && is_digit(at(j + 2))))) {
      j += 2;
      while (is_digit(at(j))) ++j;
    }
    emit(TokenKind::numeric_literal, pos_, j);
  }

  // Keyword or prefixed name. A '.' is part of a name only when another name
  // character follows it, so "orkgr:R1." ends before the dot.
  void lex_word() {
    const size_t start = pos_;
    size_t j = pos_;
    auto read_name = [&](bool local) {
      while (j < s_.size()) {
        char c = s_[j];
        if (is_name_char(c) || (local && (c == ':' || c == '%'))) {
          ++j;
        } else if (c == '.' && is_name_char(at(j + 1))) {
          ++j;
        } else {
          break;
        }
      }
    };
    read_name(false);
    if (at(j) == ':') {
      ++j;
      read_name(true);
      emit(TokenKind::prefixed_name, start, j);
    } else {
      emit(TokenKind::keyword, start, j);
    }
  }

  std::string_view s_;
  size_t pos_ = 0;
  std::vector<Token> tokens_;
};

}  // namespace

std::variant<std::vector<Token>, Diagnostic> tokenize(std::string_view text) {
  return Lexer(text).run();
}

}  // namespace sparqlgen::sparql
