#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparqlgen/execution.hpp"
#include "sparqlgen/results.hpp"

namespace sparqlgen {

// Identifies the tokenizer in reports; bump when tokenize_query changes.
inline constexpr const char* kTokenizerVersion = "sparqlgen-query-tokenizer/1";

using TokenSequence = std::vector<std::string>;

// Whitespace split, then each of { } ( ) . , ; = < > becomes its own token.
// Variables (?x) and prefixed names (orkgp:P31) stay whole, and so do <...>
// IRIs, quoted literals with any @lang or ^^datatype suffix, and decimal
// numbers such as 1.5.
TokenSequence tokenize_query(std::string_view text);

// Sentence BLEU-4: uniform weights, brevity penalty exp(1 - r/c) when c < r,
// and a precision with zero matches smoothed to eps / (total + eps), which is 1
// when the candidate has no n-grams of that order.
double bleu4(const TokenSequence& candidate, const TokenSequence& reference);
inline constexpr double kBleuEpsilon = 1e-9;

// n-gram overlap F1; 0 when either side has no n-grams.
double rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n);
// Longest-common-subsequence F1; 0 when either side is empty.
double rouge_l(const TokenSequence& candidate, const TokenSequence& reference);
size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

bool relaxed_em_pair(const NormalizedResultSet& generated, const NormalizedResultSet& gold);

// Everything score_run needs about one test item.
struct ScoredItem {
  std::string id;
  std::string generated_query;
  std::string gold_query;
  ExecutionOutcome outcome;
  NormalizedResultSet gold;
};

struct ItemScore {
  std::string id;
  double bleu4 = 0, rouge1 = 0, rouge2 = 0, rouge_l = 0;
  ExecutionStatus status = ExecutionStatus::transport_error;
  bool non_empty = false;
  bool match = false;

  bool operator==(const ItemScore&) const = default;
};

// Six metric values in report order.
struct MetricValues {
  double bleu4 = 0, rouge1 = 0, rouge2 = 0, rouge_l = 0, relaxed_em_success = 0, relaxed_em_all = 0;

  static constexpr size_t kCount = 6;
  static const char* name(size_t i);
  double get(size_t i) const;
  double& get(size_t i);
  bool operator==(const MetricValues&) const = default;
};

struct MetricReport {
  MetricValues values;
  size_t n_total = 0;
  size_t n_success = 0;  // executed with a non-empty result
  size_t n_match = 0;
  size_t n_syntax_fail = 0;
  size_t n_empty = 0;
  size_t n_exec_fail = 0;  // transport errors and timeouts
  std::vector<ItemScore> per_item;

  bool operator==(const MetricReport&) const = default;
};

// Throws EmptyRun for no items. RelaxedEM(success) is 0 when n_success == 0.
// Averages are computed over sorted values, so item order does not matter.
MetricReport score_run(std::span<const ScoredItem> items);

struct RunAggregate {
  MetricValues mean;
  MetricValues std;  // population standard deviation
  size_t runs = 0;
};

// Throws EmptyList for no reports.
RunAggregate aggregate_runs(std::span<const MetricReport> reports);

}  // namespace sparqlgen
