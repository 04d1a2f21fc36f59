#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sparqlgen::sparql {

// Heap-allocated value with deep copy and deep equality, used to break the
// recursion between patterns and subqueries.
template <typename T>
class Box {
 public:
  Box() : ptr_(std::make_unique<T>()) {}
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(implicit)
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  const T& operator*() const { return *ptr_; }
  T& operator*() { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  T* operator->() { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

inline constexpr const char* kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

struct Term {
  enum class Kind { variable, iri, prefixed_name, blank_node, literal, numeric, boolean };

  Kind kind = Kind::variable;
  // variable: name without '?'; iri: without angle brackets; prefixed_name
  // and blank_node: source text; literal: quoted lexical text as written;
  // numeric: digits with optional sign; boolean: "true" / "false".
  std::string value;
  std::string lang;      // literal only, without '@'
  std::string datatype;  // literal only, "<iri>" or prefixed name as written

  bool is_variable() const { return kind == Kind::variable; }
  bool operator==(const Term&) const = default;

  static Term variable(std::string name) { return Term{Kind::variable, std::move(name), {}, {}}; }
  static Term iri(std::string value) { return Term{Kind::iri, std::move(value), {}, {}}; }
  static Term prefixed(std::string value) {
    return Term{Kind::prefixed_name, std::move(value), {}, {}};
  }
};

// Canonical text of a term ("?x", "<http://..>", "orkgp:P31", "\"v\"@en").
std::string to_text(const Term& term);

struct Expression {
  enum class Kind { term, unary, binary, call, aggregate, in_list };

  Kind kind = Kind::term;
  Term term;
  // unary/binary: operator; call: function name (uppercased keyword or the
  // IRI/prefixed name as written); aggregate: COUNT, SUM, MIN, MAX, AVG;
  // in_list: "IN" or "NOT IN".
  std::string op;
  bool distinct = false;  // aggregate DISTINCT
  bool star = false;      // COUNT(*)
  std::vector<Expression> args;

  bool operator==(const Expression&) const = default;

  static Expression of(Term t) {
    Expression e;
    e.term = std::move(t);
    return e;
  }
};

bool contains_aggregate(const Expression& e);

struct GraphPattern;
struct QueryAst;

struct TriplePattern {
  Term subject;
  Term predicate;
  Term object;

  bool operator==(const TriplePattern&) const = default;
};

struct FilterElement {
  Expression expr;
  bool operator==(const FilterElement&) const = default;
};

struct OptionalElement {
  Box<GraphPattern> pattern;
  bool operator==(const OptionalElement&) const = default;
};

// A plain nested { ... } group.
struct GroupElement {
  Box<GraphPattern> pattern;
  bool operator==(const GroupElement&) const = default;
};

// { A } UNION { B } [UNION { C } ...]; always at least two branches.
struct UnionElement {
  std::vector<Box<GraphPattern>> branches;
  bool operator==(const UnionElement&) const = default;
};

// { SELECT ... } occupying its own brace-delimited group.
struct SubSelectElement {
  Box<QueryAst> query;
  bool operator==(const SubSelectElement&) const = default;
};

struct BindElement {
  Expression expr;
  std::string var;
  bool operator==(const BindElement&) const = default;
};

using PatternElement = std::variant<TriplePattern, FilterElement, OptionalElement, GroupElement,
                                    UnionElement, SubSelectElement, BindElement>;

struct GraphPattern {
  std::vector<PatternElement> elements;
  bool operator==(const GraphPattern&) const = default;
};

struct ProjectionItem {
  std::optional<Expression> expr;  // empty for a plain variable
  std::string var;

  bool is_aggregate() const { return expr && contains_aggregate(*expr); }
  bool operator==(const ProjectionItem&) const = default;
};

struct GroupCondition {
  Expression expr;
  std::optional<std::string> alias;
  bool operator==(const GroupCondition&) const = default;
};

struct OrderCondition {
  Expression expr;
  bool descending = false;
  bool operator==(const OrderCondition&) const = default;
};

struct QueryAst {
  // Declaration order is kept; redeclaring a prefix replaces its IRI.
  std::vector<std::pair<std::string, std::string>> prefixes;
  bool distinct = false;
  bool select_star = false;
  std::vector<ProjectionItem> projection;
  GraphPattern where;
  std::vector<GroupCondition> group_by;
  std::vector<OrderCondition> order_by;
  std::optional<std::uint64_t> limit;
  std::optional<std::uint64_t> offset;

  bool operator==(const QueryAst&) const = default;
};

}  // namespace sparqlgen::sparql
