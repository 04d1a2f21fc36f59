#include "sparqlgen/sparql/parser.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "sparqlgen/util.hpp"

namespace sparqlgen::sparql {

bool contains_aggregate(const Expression& e) {
  if (e.kind == Expression::Kind::aggregate) return true;
  return std::any_of(e.args.begin(), e.args.end(), contains_aggregate);
}

namespace {

struct Failure {
  Diagnostic diag;
};

constexpr std::string_view kAggregates[] = {"COUNT", "SUM", "MIN", "MAX", "AVG"};
constexpr std::string_view kUnsupportedAggregates[] = {"SAMPLE", "GROUP_CONCAT"};
constexpr std::string_view kUnsupportedForms[] = {"ASK",  "CONSTRUCT", "DESCRIBE", "INSERT",
                                                  "DELETE", "LOAD",    "CLEAR",    "DROP",
                                                  "CREATE", "ADD",     "MOVE",     "COPY",
                                                  "WITH"};
constexpr std::string_view kUnsupportedInGroup[] = {"MINUS", "GRAPH", "SERVICE", "VALUES",
                                                    "EXISTS", "NOT"};

template <size_t N>
bool in_list(std::string_view word, const std::string_view (&list)[N]) {
  return std::any_of(std::begin(list), std::end(list),
                     [&](std::string_view kw) { return iequals(word, kw); });
}

// Result of parsing one brace-delimited group.
struct Group {
  GraphPattern pattern;
  std::optional<QueryAst> subquery;

  GraphPattern as_pattern() && {
    if (!subquery) return std::move(pattern);
    GraphPattern gp;
    gp.elements.emplace_back(SubSelectElement{std::move(*subquery)});
    return gp;
  }
  PatternElement as_element() && {
    if (subquery) return SubSelectElement{std::move(*subquery)};
    return GroupElement{std::move(pattern)};
  }
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ParseResult run() {
    try {
      QueryAst q;
      parse_prologue(q);
      prefixes_ = q.prefixes;
      parse_select(q);
      if (peek().kind != TokenKind::eof) {
        fail(DiagnosticCode::GeneralSyntax, "unexpected " + describe(peek()) + " after end of query");
      }
      if (!soft_.empty()) return sorted(std::move(soft_));
      return q;
    } catch (Failure& f) {
      std::vector<Diagnostic> out;
      for (auto& d : soft_) {
        if (d.offset < f.diag.offset) out.push_back(std::move(d));
      }
      out.push_back(std::move(f.diag));
      return sorted(std::move(out));
    }
  }

 private:
  static std::vector<Diagnostic> sorted(std::vector<Diagnostic> d) {
    std::stable_sort(d.begin(), d.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.offset < b.offset; });
    return d;
  }

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  static bool is_kw(const Token& t, std::string_view kw) {
    return t.kind == TokenKind::keyword && iequals(t.text, kw);
  }
  static bool is_punct(const Token& t, std::string_view p) {
    return t.kind == TokenKind::punct && t.text == p;
  }
  bool at_kw(std::string_view kw) const { return is_kw(peek(), kw); }
  bool at_punct(std::string_view p) const { return is_punct(peek(), p); }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::eof) return "end of input";
    return "'" + t.text + "'";
  }

  [[noreturn]] void fail(DiagnosticCode code, std::string message) const {
    throw Failure{Diagnostic{code, std::move(message), peek().offset}};
  }

  [[noreturn]] void fail_at(DiagnosticCode code, std::string message, size_t offset) const {
    throw Failure{Diagnostic{code, std::move(message), offset}};
  }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) {
      fail(DiagnosticCode::GeneralSyntax,
           "mismatched input " + describe(peek()) + " expecting '" + std::string(p) + "'");
    }
    advance();
  }

  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) {
      fail(DiagnosticCode::GeneralSyntax,
           "mismatched input " + describe(peek()) + " expecting " + std::string(kw));
    }
    advance();
  }

  [[noreturn]] void fail_bare_select() const {
    fail(DiagnosticCode::MalformedSubquery,
         "mismatched input 'SELECT' expecting '}': a subquery must be enclosed in its own "
         "braces");
  }

  std::string expect_variable() {
    if (peek().kind != TokenKind::variable) {
      fail(DiagnosticCode::GeneralSyntax, "expected a variable but found " + describe(peek()));
    }
    return advance().text.substr(1);
  }

  // ---------------------------------------------------------------- prologue

  void parse_prologue(QueryAst& q) {
    while (true) {
      if (at_kw("BASE")) fail(DiagnosticCode::UnsupportedForm, "BASE declarations are unsupported");
      if (!at_kw("PREFIX")) return;
      advance();
      const Token& name = peek();
      if (name.kind != TokenKind::prefixed_name || name.text.back() != ':' ||
          name.text.find(':') != name.text.size() - 1) {
        fail(DiagnosticCode::GeneralSyntax, "expected a prefix name like 'ex:' after PREFIX");
      }
      std::string prefix = name.text.substr(0, name.text.size() - 1);
      advance();
      if (peek().kind != TokenKind::iri) {
        fail(DiagnosticCode::GeneralSyntax, "expected an IRI in PREFIX declaration");
      }
      std::string iri = advance().text;
      iri = iri.substr(1, iri.size() - 2);
      auto it = std::find_if(q.prefixes.begin(), q.prefixes.end(),
                             [&](const auto& p) { return p.first == prefix; });
      if (it != q.prefixes.end()) {
        it->second = iri;
      } else {
        q.prefixes.emplace_back(std::move(prefix), std::move(iri));
      }
    }
  }

  // ------------------------------------------------------------------ select

  void parse_select(QueryAst& q) {
    if (peek().kind == TokenKind::keyword && in_list(peek().text, kUnsupportedForms)) {
      fail(DiagnosticCode::UnsupportedForm,
           "query form " + to_upper(peek().text) + " is unsupported; only SELECT queries are");
    }
    expect_kw("SELECT");
    if (at_kw("DISTINCT")) {
      advance();
      q.distinct = true;
    } else if (at_kw("REDUCED")) {
      fail(DiagnosticCode::UnsupportedForm, "SELECT REDUCED is unsupported");
    }
    parse_projection(q);
    if (at_kw("FROM")) fail(DiagnosticCode::UnsupportedForm, "dataset clauses (FROM) are unsupported");
    if (at_kw("WHERE")) advance();
    if (at_kw("SELECT")) fail_bare_select();
    if (!at_punct("{")) {
      fail(DiagnosticCode::GeneralSyntax,
           "mismatched input " + describe(peek()) + " expecting '{'");
    }
    q.where = parse_group().as_pattern();
    parse_modifiers(q);
  }

  void parse_projection(QueryAst& q) {
    if (at_punct("*")) {
      advance();
      q.select_star = true;
      return;
    }
    std::set<std::string> names;
    while (true) {
      const size_t offset = peek().offset;
      ProjectionItem item;
      if (peek().kind == TokenKind::variable) {
        item.var = expect_variable();
      } else if (at_punct("(")) {
        advance();
        item.expr = parse_expression();
        if (!at_kw("AS")) {
          fail(DiagnosticCode::GeneralSyntax,
               "mismatched input " + describe(peek()) + " expecting AS in projection");
        }
        advance();
        item.var = expect_variable();
        expect_punct(")");
      } else {
        break;
      }
      if (!names.insert(item.var).second) {
        fail_at(DiagnosticCode::GeneralSyntax, "duplicate projection name ?" + item.var, offset);
      }
      q.projection.push_back(std::move(item));
    }
    if (q.projection.empty()) {
      fail(DiagnosticCode::GeneralSyntax,
           "expected a variable, '(expression AS ?var)' or '*' in SELECT but found " +
               describe(peek()));
    }
  }

  void parse_modifiers(QueryAst& q) {
    if (at_kw("GROUP")) {
      advance();
      expect_kw("BY");
      do {
        q.group_by.push_back(parse_group_condition());
      } while (starts_condition());
    }
    if (at_kw("HAVING")) fail(DiagnosticCode::UnsupportedForm, "HAVING is unsupported");
    if (at_kw("ORDER")) {
      advance();
      expect_kw("BY");
      do {
        q.order_by.push_back(parse_order_condition());
      } while (starts_condition() || at_kw("ASC") || at_kw("DESC"));
    }
    for (int i = 0; i < 2; ++i) {
      if (at_kw("LIMIT") && !q.limit) {
        advance();
        q.limit = parse_count("LIMIT");
      } else if (at_kw("OFFSET") && !q.offset) {
        advance();
        q.offset = parse_count("OFFSET");
      }
    }
    if (at_kw("VALUES")) fail(DiagnosticCode::UnsupportedForm, "VALUES is unsupported");
  }

  std::uint64_t parse_count(const char* what) {
    const Token& t = peek();
    std::uint64_t v = 0;
    if (t.kind == TokenKind::numeric_literal) {
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec == std::errc{} && ptr == t.text.data() + t.text.size()) {
        advance();
        return v;
      }
    }
    fail(DiagnosticCode::GeneralSyntax,
         std::string("expected a non-negative integer after ") + what + " but found " + describe(t));
  }

  bool starts_call() const {
    const Token& t = peek();
    return (t.kind == TokenKind::keyword || t.kind == TokenKind::iri ||
            t.kind == TokenKind::prefixed_name) &&
           is_punct(peek(1), "(") && !is_kw(t, "ASC") && !is_kw(t, "DESC") && !is_kw(t, "HAVING");
  }

  bool starts_condition() const {
    return peek().kind == TokenKind::variable || at_punct("(") || starts_call();
  }

  GroupCondition parse_group_condition() {
    GroupCondition c;
    if (peek().kind == TokenKind::variable) {
      c.expr = Expression::of(Term::variable(expect_variable()));
    } else if (at_punct("(")) {
      advance();
      c.expr = parse_expression();
      if (at_kw("AS")) {
        advance();
        c.alias = expect_variable();
      }
      expect_punct(")");
    } else if (starts_call()) {
      c.expr = parse_primary();
    } else {
      fail(DiagnosticCode::GeneralSyntax, "expected a GROUP BY condition but found " + describe(peek()));
    }
    return c;
  }

  OrderCondition parse_order_condition() {
    OrderCondition c;
    if (at_kw("ASC") || at_kw("DESC")) {
      c.descending = at_kw("DESC");
      advance();
      expect_punct("(");
      c.expr = parse_expression();
      expect_punct(")");
    } else if (peek().kind == TokenKind::variable) {
      c.expr = Expression::of(Term::variable(expect_variable()));
    } else if (at_punct("(")) {
      advance();
      c.expr = parse_expression();
      expect_punct(")");
    } else if (starts_call()) {
      c.expr = parse_primary();
    } else {
      fail(DiagnosticCode::GeneralSyntax, "expected an ORDER BY condition but found " + describe(peek()));
    }
    return c;
  }

  // ------------------------------------------------------------------ groups

  Group parse_group() {
    expect_punct("{");
    Group g;
    if (at_kw("SELECT")) {
      QueryAst sub;
      parse_select(sub);
      if (!at_punct("}")) {
        fail(DiagnosticCode::MalformedSubquery,
             "mismatched input " + describe(peek()) +
                 " expecting '}': a subquery must be the only content of its group");
      }
      advance();
      g.subquery = std::move(sub);
      return g;
    }
    // Triples may not directly follow triples without a '.', and a '.' must
    // follow some element.
    enum class Last { none, triples, other } last = Last::none;
    while (true) {
      const Token& t = peek();
      if (is_punct(t, "}")) {
        advance();
        return g;
      }
      if (t.kind == TokenKind::eof) {
        fail(DiagnosticCode::GeneralSyntax, "mismatched input end of input expecting '}'");
      }
      if (is_punct(t, ".")) {
        if (last == Last::none) fail(DiagnosticCode::GeneralSyntax, "unexpected '.'");
        advance();
        last = Last::none;
        continue;
      }
      if (is_kw(t, "SELECT")) fail_bare_select();
      if (t.kind == TokenKind::keyword && in_list(t.text, kUnsupportedInGroup)) {
        fail(DiagnosticCode::UnsupportedForm, to_upper(t.text) + " is unsupported");
      }
      if (is_kw(t, "OPTIONAL")) {
        advance();
        if (at_kw("SELECT")) fail_bare_select();
        g.pattern.elements.emplace_back(OptionalElement{parse_group().as_pattern()});
      } else if (is_kw(t, "FILTER")) {
        advance();
        g.pattern.elements.emplace_back(FilterElement{parse_constraint()});
      } else if (is_kw(t, "BIND")) {
        advance();
        expect_punct("(");
        BindElement b;
        b.expr = parse_expression();
        expect_kw("AS");
        b.var = expect_variable();
        expect_punct(")");
        g.pattern.elements.emplace_back(std::move(b));
      } else if (is_punct(t, "{")) {
        Group first = parse_group();
        if (at_kw("UNION")) {
          UnionElement u;
          u.branches.emplace_back(std::move(first).as_pattern());
          while (at_kw("UNION")) {
            advance();
            if (at_kw("SELECT")) fail_bare_select();
            u.branches.emplace_back(parse_group().as_pattern());
          }
          g.pattern.elements.emplace_back(std::move(u));
        } else {
          g.pattern.elements.push_back(std::move(first).as_element());
        }
      } else {
        if (last == Last::triples) {
          fail(DiagnosticCode::GeneralSyntax,
               "mismatched input " + describe(t) + " expecting '.' or '}'");
        }
        parse_triples_same_subject(g.pattern);
        last = Last::triples;
        continue;
      }
      last = Last::other;
    }
  }

  Expression parse_constraint() {
    if (at_punct("(") || starts_call()) return parse_primary();
    fail(DiagnosticCode::GeneralSyntax,
         "expected '(' or a function call after FILTER but found " + describe(peek()));
  }

  // ----------------------------------------------------------------- triples

  void parse_triples_same_subject(GraphPattern& gp) {
    Term subject = parse_node("subject");
    while (true) {
      Term predicate = parse_verb();
      while (true) {
        Term object = parse_node("object");
        gp.elements.emplace_back(TriplePattern{subject, predicate, std::move(object)});
        if (!at_punct(",")) break;
        advance();
      }
      if (!at_punct(";")) return;
      while (at_punct(";")) advance();
      if (!starts_verb()) return;
    }
  }

  bool starts_verb() const {
    const Token& t = peek();
    return t.kind == TokenKind::variable || t.kind == TokenKind::iri ||
           t.kind == TokenKind::prefixed_name || is_kw(t, "a") || is_punct(t, "^") ||
           is_punct(t, "!");
  }

  Term parse_verb() {
    const Token& t = peek();
    if (is_punct(t, "^") || is_punct(t, "!") || is_punct(t, "(")) {
      fail(DiagnosticCode::GeneralSyntax, "property paths unsupported");
    }
    Term verb;
    if (is_kw(t, "a")) {
      advance();
      verb = Term::iri(kRdfType);
    } else if (t.kind == TokenKind::variable || t.kind == TokenKind::iri ||
               t.kind == TokenKind::prefixed_name) {
      verb = parse_node("predicate");
    } else if (is_kw(t, "SELECT")) {
      fail_bare_select();
    } else {
      fail(DiagnosticCode::GeneralSyntax, "expected a predicate but found " + describe(t));
    }
    const Token& next = peek();
    if (next.kind == TokenKind::punct &&
        (next.text == "/" || next.text == "|" || next.text == "*" || next.text == "+" ||
         next.text == "?")) {
      fail(DiagnosticCode::GeneralSyntax, "property paths unsupported");
    }
    return verb;
  }

  Term resolve_prefixed(const Token& t) {
    const std::string prefix = t.text.substr(0, t.text.find(':'));
    if (prefix == "_") return Term{Term::Kind::blank_node, t.text, {}, {}};
    const bool known = std::any_of(prefixes_.begin(), prefixes_.end(),
                                   [&](const auto& p) { return p.first == prefix; });
    if (!known) {
      soft_.push_back(Diagnostic{DiagnosticCode::UnknownPrefix,
                                 "unknown prefix '" + prefix + ":' in " + t.text, t.offset});
    }
    return Term::prefixed(t.text);
  }

  // Variable, IRI, prefixed name, blank node, or literal.
  Term parse_node(const char* role) {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::variable:
        return Term::variable(advance().text.substr(1));
      case TokenKind::iri: {
        std::string v = advance().text;
        return Term::iri(v.substr(1, v.size() - 2));
      }
      case TokenKind::prefixed_name:
        return resolve_prefixed(advance());
      case TokenKind::string_literal:
        return parse_literal();
      case TokenKind::numeric_literal:
        return Term{Term::Kind::numeric, advance().text, {}, {}};
      case TokenKind::keyword:
        if (is_kw(t, "true") || is_kw(t, "false")) {
          return Term{Term::Kind::boolean, to_lower(advance().text), {}, {}};
        }
        if (is_kw(t, "SELECT")) fail_bare_select();
        break;
      case TokenKind::punct:
        if ((t.text == "-" || t.text == "+") && peek(1).kind == TokenKind::numeric_literal &&
            peek(1).offset == t.offset + 1) {
          std::string sign = advance().text;
          std::string digits = advance().text;
          return Term{Term::Kind::numeric, sign == "-" ? "-" + digits : digits, {}, {}};
        }
        if (t.text == "[" || t.text == "(") {
          fail(DiagnosticCode::UnsupportedForm, "blank node property lists and collections are unsupported");
        }
        break;
      case TokenKind::eof:
        break;
    }
    fail(DiagnosticCode::GeneralSyntax, std::string("expected ") + role + " but found " + describe(t));
  }

  Term parse_literal() {
    const std::string text = advance().text;
    Term lit{Term::Kind::literal, text, {}, {}};
    const char q = text[0];
    const size_t close = text.rfind(q);
    if (close + 1 < text.size() && text[close + 1] == '@') {
      lit.value = text.substr(0, close + 1);
      lit.lang = text.substr(close + 2);
    }
    if (at_punct("^^")) {
      advance();
      const Token& dt = peek();
      if (dt.kind == TokenKind::iri) {
        lit.datatype = advance().text;
      } else if (dt.kind == TokenKind::prefixed_name) {
        lit.datatype = resolve_prefixed(advance()).value;
      } else {
        fail(DiagnosticCode::GeneralSyntax, "expected a datatype IRI after '^^'");
      }
    }
    return lit;
  }

  // ------------------------------------------------------------- expressions

  Expression parse_expression() { return parse_or(); }

  static Expression binary(std::string op, Expression lhs, Expression rhs) {
    Expression e;
    e.kind = Expression::Kind::binary;
    e.op = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  Expression parse_or() {
    Expression lhs = parse_and();
    while (at_punct("||")) {
      advance();
      lhs = binary("||", std::move(lhs), parse_and());
    }
    return lhs;
  }

  Expression parse_and() {
    Expression lhs = parse_relational();
    while (at_punct("&&")) {
      advance();
      lhs = binary("&&", std::move(lhs), parse_relational());
    }
    return lhs;
  }

  Expression parse_relational() {
    Expression lhs = parse_additive();
    static constexpr std::string_view kOps[] = {"=", "!=", "<", ">", "<=", ">="};
    for (auto op : kOps) {
      if (at_punct(op)) {
        advance();
        return binary(std::string(op), std::move(lhs), parse_additive());
      }
    }
    const bool negated = at_kw("NOT") && is_kw(peek(1), "IN");
    if (at_kw("IN") || negated) {
      advance();
      if (negated) advance();
      Expression e;
      e.kind = Expression::Kind::in_list;
      e.op = negated ? "NOT IN" : "IN";
      e.args.push_back(std::move(lhs));
      expect_punct("(");
      if (!at_punct(")")) {
        e.args.push_back(parse_expression());
        while (at_punct(",")) {
          advance();
          e.args.push_back(parse_expression());
        }
      }
      expect_punct(")");
      return e;
    }
    return lhs;
  }

  Expression parse_additive() {
    Expression lhs = parse_multiplicative();
    while (at_punct("+") || at_punct("-")) {
      std::string op = advance().text;
      lhs = binary(std::move(op), std::move(lhs), parse_multiplicative());
    }
    return lhs;
  }

  Expression parse_multiplicative() {
    Expression lhs = parse_unary();
    while (at_punct("*") || at_punct("/")) {
      std::string op = advance().text;
      lhs = binary(std::move(op), std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Expression parse_unary() {
    if (at_punct("!") || at_punct("-") || at_punct("+")) {
      Expression e;
      e.kind = Expression::Kind::unary;
      e.op = advance().text;
      e.args.push_back(parse_unary());
      return e;
    }
    return parse_primary();
  }

  std::vector<Expression> parse_arguments() {
    std::vector<Expression> args;
    expect_punct("(");
    if (!at_punct(")")) {
      args.push_back(parse_expression());
      while (at_punct(",")) {
        advance();
        args.push_back(parse_expression());
      }
    }
    expect_punct(")");
    return args;
  }

  Expression parse_primary() {
    const Token& t = peek();
    if (is_punct(t, "(")) {
      advance();
      Expression e = parse_expression();
      expect_punct(")");
      return e;
    }
    switch (t.kind) {
      case TokenKind::variable:
      case TokenKind::string_literal:
      case TokenKind::numeric_literal:
        return Expression::of(parse_node("expression"));
      case TokenKind::iri:
      case TokenKind::prefixed_name: {
        if (is_punct(peek(1), "(")) {
          Expression e;
          e.kind = Expression::Kind::call;
          Term fn = parse_node("function");
          e.op = to_text(fn);
          e.args = parse_arguments();
          return e;
        }
        return Expression::of(parse_node("expression"));
      }
      case TokenKind::keyword: {
        if (is_kw(t, "true") || is_kw(t, "false")) return Expression::of(parse_node("expression"));
        if (is_kw(t, "SELECT")) fail_bare_select();
        if (in_list(t.text, kUnsupportedAggregates) || is_kw(t, "EXISTS") || is_kw(t, "NOT")) {
          fail(DiagnosticCode::UnsupportedForm, to_upper(t.text) + " is unsupported");
        }
        if (in_list(t.text, kAggregates)) return parse_aggregate();
        if (is_punct(peek(1), "(")) {
          Expression e;
          e.kind = Expression::Kind::call;
          e.op = to_upper(advance().text);
          e.args = parse_arguments();
          return e;
        }
        break;
      }
      default:
        break;
    }
    fail(DiagnosticCode::GeneralSyntax, "unexpected " + describe(t) + " in expression");
  }

  Expression parse_aggregate() {
    Expression e;
    e.kind = Expression::Kind::aggregate;
    e.op = to_upper(advance().text);
    expect_punct("(");
    if (at_kw("DISTINCT")) {
      advance();
      e.distinct = true;
    }
    if (at_punct("*")) {
      if (e.op != "COUNT") fail(DiagnosticCode::GeneralSyntax, "only COUNT accepts '*'");
      advance();
      e.star = true;
    } else {
      e.args.push_back(parse_expression());
    }
    expect_punct(")");
    return e;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<std::pair<std::string, std::string>> prefixes_;
  std::vector<Diagnostic> soft_;
};

}  // namespace

ParseResult parse(std::string_view text) {
  auto lexed = tokenize(text);
  if (auto* diag = std::get_if<Diagnostic>(&lexed)) return std::vector<Diagnostic>{*diag};
  return Parser(std::move(std::get<std::vector<Token>>(lexed))).run();
}

}  // namespace sparqlgen::sparql
