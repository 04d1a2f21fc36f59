#include "sparqlgen/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "sparqlgen/errors.hpp"

namespace sparqlgen {

namespace {

constexpr std::string_view kPunct = "{}().,;=<>";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return kPunct.find(c) != std::string_view::npos; }

using NgramCounts = std::map<std::vector<std::string>, size_t>;

NgramCounts ngrams(const TokenSequence& seq, size_t n) {
  NgramCounts out;
  if (n == 0 || seq.size() < n) return out;
  for (size_t i = 0; i + n <= seq.size(); ++i) {
    ++out[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                   seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  size_t m = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(count, it->second);
  }
  return m;
}

double f1(double overlap, double cand_total, double ref_total) {
  if (cand_total == 0 || ref_total == 0 || overlap == 0) return 0.0;
  const double p = overlap / cand_total;
  const double r = overlap / ref_total;
  return 2 * p * r / (p + r);
}

double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TokenSequence tokenize_query(std::string_view s) {
  TokenSequence out;
  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '"' || c == '\'') {
      size_t j = i + 1;
      while (j < s.size() && s[j] != c) j += s[j] == '\\' ? 2 : 1;
      j = std::min(j + 1, s.size());
      // A language tag or datatype stays with its literal.
      if (j < s.size() && s[j] == '@') {
        ++j;
        while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-')) ++j;
      } else if (s.substr(j, 2) == "^^") {
        j += 2;
        if (j < s.size() && s[j] == '<') {
          const size_t close = s.find('>', j);
          j = close == std::string_view::npos ? s.size() : close + 1;
        } else {
          while (j < s.size() && !is_space(s[j]) && !is_punct(s[j])) ++j;
        }
      }
      out.emplace_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '<') {
      size_t j = i + 1;
      while (j < s.size() && s[j] != '>' && s[j] != '<' && !is_space(s[j])) ++j;
      if (j < s.size() && s[j] == '>' && j > i + 1 && !is_punct(s[i + 1]) && s[i + 1] != '?') {
        out.emplace_back(s.substr(i, j + 1 - i));
        i = j + 1;
        continue;
      }
    }
    if (is_punct(c)) {
      out.emplace_back(1, c);
      ++i;
      continue;
    }
    size_t j = i;
    while (j < s.size() && !is_space(s[j]) && s[j] != '"' && s[j] != '\'') {
      if (is_punct(s[j])) {
        // Keep decimal points inside numbers.
        const bool decimal = s[j] == '.' && j > i && is_digit(s[j - 1]) && j + 1 < s.size() &&
                             is_digit(s[j + 1]);
        if (!decimal) break;
      }
      ++j;
    }
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double bleu4(const TokenSequence& candidate, const TokenSequence& reference) {
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    const auto cand = ngrams(candidate, n);
    const double total = candidate.size() >= n ? static_cast<double>(candidate.size() - n + 1) : 0.0;
    const double matches = static_cast<double>(clipped_overlap(cand, ngrams(reference, n)));
    const double p = matches == 0 ? kBleuEpsilon / (total + kBleuEpsilon) : matches / total;
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

double rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
  if (n < 1) throw PreconditionError("rouge_n: n must be >= 1");
  const auto cand = ngrams(candidate, static_cast<size_t>(n));
  const auto ref = ngrams(reference, static_cast<size_t>(n));
  auto total = [](const NgramCounts& m) {
    size_t t = 0;
    for (const auto& [_, c] : m) t += c;
    return static_cast<double>(t);
  };
  return f1(static_cast<double>(clipped_overlap(cand, ref)), total(cand), total(ref));
}

size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  return f1(static_cast<double>(lcs_length(candidate, reference)),
            static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
}

bool relaxed_em_pair(const NormalizedResultSet& generated, const NormalizedResultSet& gold) {
  return generated == gold;
}

const char* MetricValues::name(size_t i) {
  static constexpr const char* names[kCount] = {"BLEU-4",  "ROUGE-1",           "ROUGE-2",
                                                "ROUGE-L", "RelaxedEM(success)", "RelaxedEM(all)"};
  return names[i];
}

double MetricValues::get(size_t i) const { return const_cast<MetricValues*>(this)->get(i); }

double& MetricValues::get(size_t i) {
  switch (i) {
    case 0: return bleu4;
    case 1: return rouge1;
    case 2: return rouge2;
    case 3: return rouge_l;
    case 4: return relaxed_em_success;
    case 5: return relaxed_em_all;
  }
  throw PreconditionError("metric index out of range");
}

MetricReport score_run(std::span<const ScoredItem> items) {
  if (items.empty()) throw EmptyRun("score_run: no items");
  MetricReport report;
  report.n_total = items.size();
  std::vector<double> b, r1, r2, rl;
  for (const auto& item : items) {
    const auto cand = tokenize_query(item.generated_query);
    const auto ref = tokenize_query(item.gold_query);
    ItemScore s;
    s.id = item.id;
    s.bleu4 = bleu4(cand, ref);
    s.rouge1 = rouge_n(cand, ref, 1);
    s.rouge2 = rouge_n(cand, ref, 2);
    s.rouge_l = rouge_l(cand, ref);
    s.status = item.outcome.status;
    switch (item.outcome.status) {
      case ExecutionStatus::success:
        if (is_empty(item.outcome)) {
          ++report.n_empty;
        } else {
          s.non_empty = true;
          ++report.n_success;
          s.match = relaxed_em_pair(normalize_results(*item.outcome.table), item.gold);
          if (s.match) ++report.n_match;
        }
        break;
      case ExecutionStatus::syntax_error: ++report.n_syntax_fail; break;
      case ExecutionStatus::transport_error:
      case ExecutionStatus::timeout: ++report.n_exec_fail; break;
    }
    b.push_back(s.bleu4);
    r1.push_back(s.rouge1);
    r2.push_back(s.rouge2);
    rl.push_back(s.rouge_l);
    report.per_item.push_back(std::move(s));
  }
  report.values.bleu4 = sorted_mean(std::move(b));
  report.values.rouge1 = sorted_mean(std::move(r1));
  report.values.rouge2 = sorted_mean(std::move(r2));
  report.values.rouge_l = sorted_mean(std::move(rl));
  report.values.relaxed_em_success =
      report.n_success == 0 ? 0.0
                            : static_cast<double>(report.n_match) / static_cast<double>(report.n_success);
  report.values.relaxed_em_all =
      static_cast<double>(report.n_match) / static_cast<double>(report.n_total);
  return report;
}

RunAggregate aggregate_runs(std::span<const MetricReport> reports) {
  if (reports.empty()) throw EmptyList("aggregate_runs: no reports");
  const auto n = static_cast<Eigen::Index>(reports.size());
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(MetricValues::kCount));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (size_t c = 0; c < MetricValues::kCount; ++c) {
      m(r, static_cast<Eigen::Index>(c)) = reports[static_cast<size_t>(r)].values.get(c);
    }
  }
  // Shifting by the first run keeps identical runs at exactly zero spread.
  const Eigen::RowVectorXd base = m.row(0);
  const Eigen::MatrixXd d = m.rowwise() - base;
  const Eigen::RowVectorXd dmean = d.colwise().mean();
  const Eigen::RowVectorXd var = (d.rowwise() - dmean).array().square().colwise().mean();

  RunAggregate agg;
  agg.runs = reports.size();
  for (size_t c = 0; c < MetricValues::kCount; ++c) {
    const auto k = static_cast<Eigen::Index>(c);
    agg.mean.get(c) = base(k) + dmean(k);
    agg.std.get(c) = std::sqrt(var(k));
  }
  return agg;
}

}  // namespace sparqlgen
