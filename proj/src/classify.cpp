#include "sparqlgen/classify.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/sparql/analysis.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

using sparql::DiagnosticCode;
using sparql::QueryAst;
using sparql::Term;

const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::SyntaxAggregation: return "SyntaxAggregation";
    case ErrorCategory::SyntaxSubquery: return "SyntaxSubquery";
    case ErrorCategory::SyntaxOther: return "SyntaxOther";
    case ErrorCategory::EmptyResult: return "EmptyResult";
    case ErrorCategory::SemanticInaccuracy: return "SemanticInaccuracy";
    case ErrorCategory::StructuralInconsistency: return "StructuralInconsistency";
    case ErrorCategory::Correct: return "Correct";
  }
  return "?";
}

std::optional<ErrorCategory> parse_error_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

namespace {

const sparql::Diagnostic* find_code(const std::vector<sparql::Diagnostic>& ds, DiagnosticCode code) {
  auto it = std::find_if(ds.begin(), ds.end(), [&](const auto& d) { return d.code == code; });
  return it == ds.end() ? nullptr : &*it;
}

ErrorCategory endpoint_syntax_category(const std::string& message) {
  const std::string lower = to_lower(message);
  if (lower.find("not aggregated") != std::string::npos) return ErrorCategory::SyntaxAggregation;
  if (lower.find("mismatched input 'select'") != std::string::npos) {
    return ErrorCategory::SyntaxSubquery;
  }
  return ErrorCategory::SyntaxOther;
}

std::string describe(const StructuralDiff& d) {
  if (!d.isomorphic) {
    if (d.triple_count_delta != 0) {
      return "triple count differs from gold by " + std::to_string(d.triple_count_delta);
    }
    return "triple pattern graph differs from gold";
  }
  std::string out = "differing constants:";
  for (const auto& [gold, gen] : d.differing_constants) out += " " + gold + " -> " + gen + ";";
  if (d.differing_constants.empty()) out += " none (difference outside the triple patterns)";
  return out;
}

// ---------------------------------------------------------------------------
// structural_diff

struct Node {
  bool var = false;
  std::string key;   // comparison key: variable name or expanded constant
  std::string text;  // as written
};

using Triple = std::array<Node, 3>;

Node make_node(const Term& t, const std::map<std::string, std::string>& prefixes) {
  Node n;
  n.text = sparql::to_text(t);
  switch (t.kind) {
    case Term::Kind::variable:
    case Term::Kind::blank_node:
      n.var = true;
      n.key = n.text;
      break;
    case Term::Kind::prefixed_name: {
      const auto colon = t.value.find(':');
      auto it = prefixes.find(t.value.substr(0, colon));
      n.key = it == prefixes.end() ? n.text : "<" + it->second + t.value.substr(colon + 1) + ">";
      break;
    }
    default:
      n.key = n.text;
  }
  return n;
}

std::vector<Triple> triples_of(const QueryAst& q) {
  const std::map<std::string, std::string> prefixes(q.prefixes.begin(), q.prefixes.end());
  std::vector<Triple> out;
  for (const auto& st : sparql::extract_triple_patterns(q)) {
    out.push_back({make_node(st.triple.subject, prefixes), make_node(st.triple.predicate, prefixes),
                   make_node(st.triple.object, prefixes)});
  }
  return out;
}

class Matcher {
 public:
  Matcher(const std::vector<Triple>& gold, const std::vector<Triple>& gen)
      : gold_(gold), gen_(gen), used_(gen.size(), false), assign_(gold.size(), 0) {}

  std::optional<std::vector<size_t>> run() {
    search(0, 0);
    return best_;
  }

 private:
  void search(size_t i, size_t cost) {
    if (best_ && cost >= best_cost_) return;
    if (i == gold_.size()) {
      best_ = assign_;
      best_cost_ = cost;
      return;
    }
    for (size_t j = 0; j < gen_.size(); ++j) {
      if (used_[j]) continue;
      std::vector<std::string> bound;
      size_t diff = 0;
      bool fits = true;
      for (size_t k = 0; k < 3 && fits; ++k) {
        const Node& a = gold_[i][k];
        const Node& b = gen_[j][k];
        if (a.var != b.var) {
          fits = false;
        } else if (!a.var) {
          if (a.key != b.key) ++diff;
        } else {
          auto fwd = g2h_.find(a.key);
          auto back = h2g_.find(b.key);
          if (fwd == g2h_.end() && back == h2g_.end()) {
            g2h_[a.key] = b.key;
            h2g_[b.key] = a.key;
            bound.push_back(a.key);
          } else if (fwd == g2h_.end() || back == h2g_.end() || fwd->second != b.key) {
            fits = false;
          }
        }
      }
      if (fits) {
        used_[j] = true;
        assign_[i] = j;
        search(i + 1, cost + diff);
        used_[j] = false;
      }
      for (const auto& key : bound) {
        h2g_.erase(g2h_[key]);
        g2h_.erase(key);
      }
      if (best_ && best_cost_ == 0) return;
    }
  }

  const std::vector<Triple>& gold_;
  const std::vector<Triple>& gen_;
  std::vector<bool> used_;
  std::vector<size_t> assign_;
  std::unordered_map<std::string, std::string> g2h_, h2g_;
  std::optional<std::vector<size_t>> best_;
  size_t best_cost_ = std::numeric_limits<size_t>::max();
};

// Sorted per-triple variable/constant shapes plus sorted variable degrees.
std::pair<std::vector<int>, std::vector<int>> degree_signature(const std::vector<Triple>& ts) {
  std::vector<int> shapes;
  std::map<std::string, int> degree;
  for (const auto& t : ts) {
    int shape = 0;
    for (size_t k = 0; k < 3; ++k) {
      if (t[k].var) {
        shape |= 1 << k;
        ++degree[t[k].key];
      }
    }
    shapes.push_back(shape);
  }
  std::vector<int> degrees;
  for (const auto& [_, d] : degree) degrees.push_back(d);
  std::sort(shapes.begin(), shapes.end());
  std::sort(degrees.begin(), degrees.end());
  return {shapes, degrees};
}

}  // namespace

StructuralDiff structural_diff(const QueryAst& generated, const QueryAst& gold) {
  const auto gen = triples_of(generated);
  const auto ref = triples_of(gold);
  StructuralDiff d;
  d.triple_count_delta = static_cast<int>(gen.size()) - static_cast<int>(ref.size());
  if (gen.size() != ref.size()) return d;

  if (ref.size() > kExactDiffLimit) {
    d.isomorphic = degree_signature(gen) == degree_signature(ref);
    return d;
  }

  const auto mapping = Matcher(ref, gen).run();
  if (!mapping) return d;
  d.isomorphic = true;
  for (size_t i = 0; i < ref.size(); ++i) {
    const Triple& a = ref[i];
    const Triple& b = gen[(*mapping)[i]];
    for (size_t k = 0; k < 3; ++k) {
      if (!a[k].var && a[k].key != b[k].key) d.differing_constants.emplace_back(a[k].text, b[k].text);
    }
  }
  return d;
}

Classification classify(const ItemEvidence& ev, const QueryAst* gold) {
  if (!ev.checked) throw IncompleteBundle("classify: query was never validated");

  if (!ev.diagnostics.empty()) {
    if (const auto* d = find_code(ev.diagnostics, DiagnosticCode::AggregationUngroupedVar)) {
      return {ErrorCategory::SyntaxAggregation, d->message};
    }
    if (const auto* d = find_code(ev.diagnostics, DiagnosticCode::MalformedSubquery)) {
      return {ErrorCategory::SyntaxSubquery, d->message};
    }
    return {ErrorCategory::SyntaxOther, ev.diagnostics.front().message};
  }

  if (!ev.ast) throw IncompleteBundle("classify: valid query without a parse tree");
  if (!ev.execution) throw IncompleteBundle("classify: valid query was never executed");
  const ExecutionOutcome& ex = *ev.execution;
  switch (ex.status) {
    case ExecutionStatus::syntax_error:
      return {endpoint_syntax_category(ex.message), ex.message};
    case ExecutionStatus::transport_error:
    case ExecutionStatus::timeout:
      return {ErrorCategory::SyntaxOther, std::string(to_string(ex.status)) + ": " + ex.message};
    case ExecutionStatus::success:
      break;
  }
  if (is_empty(ex)) return {ErrorCategory::EmptyResult, "query returned no rows"};
  if (!ev.match) throw IncompleteBundle("classify: non-empty result was never compared with gold");
  if (*ev.match) return {ErrorCategory::Correct, {}};
  if (!gold) return {ErrorCategory::StructuralInconsistency, "gold query unavailable for comparison"};

  const StructuralDiff diff = structural_diff(*ev.ast, *gold);
  return {diff.isomorphic ? ErrorCategory::SemanticInaccuracy : ErrorCategory::StructuralInconsistency,
          describe(diff)};
}

}  // namespace sparqlgen
