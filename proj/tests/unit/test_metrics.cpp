#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "sparqlgen/errors.hpp"
#include "sparqlgen/metrics.hpp"

using namespace sparqlgen;
using Seq = TokenSequence;

namespace {

Seq random_seq(std::mt19937& rng, size_t max_len, int alphabet) {
  std::uniform_int_distribution<size_t> len(0, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  Seq s(len(rng));
  for (auto& t : s) t = std::string(1, static_cast<char>('a' + sym(rng)));
  return s;
}

ResultTable one_row(const std::string& v) { return ResultTable{{"x"}, {{v}}}; }

ScoredItem item(std::string id, ExecutionOutcome outcome, const std::string& gold_value) {
  ScoredItem s;
  s.id = std::move(id);
  s.generated_query = "SELECT ?x WHERE { ?x ?p ?o }";
  s.gold_query = "SELECT ?x WHERE { ?x ?p ?o }";
  s.outcome = std::move(outcome);
  s.gold = normalize_results(one_row(gold_value));
  return s;
}

MetricReport with_bleu(double b) {
  MetricReport r;
  r.values.bleu4 = b;
  r.values.rouge1 = 0.5;
  return r;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("tokenizer") {
    CHECK(tokenize_query("SELECT ?s WHERE { ?s ?p ?o }") ==
          Seq{"SELECT", "?s", "WHERE", "{", "?s", "?p", "?o", "}"});
    CHECK(tokenize_query("").empty());
    CHECK(tokenize_query("{?s}") == Seq{"{", "?s", "}"});
    CHECK(tokenize_query("?e orkgp:HAS_VALUE ?v . FILTER(?v > 1.5)") ==
          Seq{"?e", "orkgp:HAS_VALUE", "?v", ".", "FILTER", "(", "?v", ">", "1.5", ")"});
    CHECK(tokenize_query("?p rdfs:label \"a b.c\"@en ;") == Seq{"?p", "rdfs:label", "\"a b.c\"@en", ";"});
    CHECK(tokenize_query("FILTER(?v = \"5\"^^xsd:int)") == Seq{"FILTER", "(", "?v", "=", "\"5\"^^xsd:int", ")"});
    CHECK(tokenize_query("\"5\"^^<http://t> .") == Seq{"\"5\"^^<http://t>", "."});
    CHECK(tokenize_query("?s <http://x.org/p> ?o.") == Seq{"?s", "<http://x.org/p>", "?o", "."});
    CHECK(tokenize_query("FILTER(?a<?b)") == Seq{"FILTER", "(", "?a", "<", "?b", ")"});
    CHECK(tokenize_query("select Where") == Seq{"select", "Where"});
  }

  TEST_CASE("tokens never contain whitespace and cover the non-space text") {
    std::mt19937 rng(7);
    const std::string alphabet = "ab ?{}().,;=<>\"\n\t:1";
    std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
    for (int t = 0; t < 500; ++t) {
      std::string s;
      for (int i = 0; i < 25; ++i) s += alphabet[pick(rng)];
      std::string joined, compact;
      for (const auto& tok : tokenize_query(s)) {
        CHECK_FALSE(tok.empty());
        joined += tok;
      }
      for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
      }
      std::erase_if(joined, [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
      CHECK(joined == compact);
    }
  }

  TEST_CASE("bleu examples") {
    const Seq q = tokenize_query("SELECT ?s WHERE { ?s ?p ?o }");
    CHECK(bleu4(q, q) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bleu4({"a", "b", "c", "d"}, {"w", "x", "y", "z"}) <= 1e-6);
    CHECK(bleu4({}, {"a"}) == 0.0);
    const Seq c{"a", "b", "c", "d"}, r{"a", "b", "c", "d", "e"};
    CHECK(bleu4(c, r) == doctest::Approx(oracle::bleu4(c, r)).epsilon(1e-9));
    CHECK(bleu4(c, r) == doctest::Approx(std::exp(1.0 - 5.0 / 4.0)).epsilon(1e-9));
  }

  TEST_CASE("rouge examples") {
    CHECK(rouge_n({"a", "b", "c"}, {"a", "c"}, 1) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(rouge_n({"a", "b"}, {"a", "b"}, 2) == 1.0);
    CHECK(rouge_n({"a", "b"}, {"c", "d"}, 1) == 0.0);
    CHECK(rouge_n({"a"}, {"a"}, 2) == 0.0);
    CHECK_THROWS_AS(rouge_n({"a"}, {"a"}, 0), PreconditionError);
    CHECK(rouge_l({"A", "B", "C", "D"}, {"A", "C", "D"}) == doctest::Approx(0.857142857).epsilon(1e-9));
    CHECK(rouge_l({"a"}, {"a"}) == 1.0);
    CHECK(rouge_l({}, {"a"}) == 0.0);
    CHECK(rouge_l({"a"}, {}) == 0.0);
  }

  TEST_CASE("scores agree with brute-force oracles") {
    std::mt19937 rng(1234);
    for (int t = 0; t < 400; ++t) {
      const Seq c = random_seq(rng, 10, 4), r = random_seq(rng, 10, 4);
      CHECK(bleu4(c, r) == doctest::Approx(oracle::bleu4(c, r)).epsilon(1e-9));
      CHECK(rouge_n(c, r, 1) == doctest::Approx(oracle::rouge_n(c, r, 1)).epsilon(1e-12));
      CHECK(rouge_n(c, r, 2) == doctest::Approx(oracle::rouge_n(c, r, 2)).epsilon(1e-12));
      CHECK(rouge_l(c, r) == doctest::Approx(oracle::rouge_l(c, r)).epsilon(1e-12));
      const size_t l = lcs_length(c, r);
      CHECK(l == oracle::lcs_exhaustive(c, r));
      CHECK(l <= std::min(c.size(), r.size()));
    }
  }

  TEST_CASE("range, identity and symmetry") {
    std::mt19937 rng(99);
    for (int t = 0; t < 400; ++t) {
      const Seq c = random_seq(rng, 12, 5), r = random_seq(rng, 12, 5);
      for (double v : {bleu4(c, r), rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r)}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(rouge_l(c, r) == doctest::Approx(rouge_l(r, c)).epsilon(1e-12));
      CHECK(rouge_n(c, r, 1) == doctest::Approx(rouge_n(r, c, 1)).epsilon(1e-12));
      CHECK(rouge_n(c, r, 2) == doctest::Approx(rouge_n(r, c, 2)).epsilon(1e-12));
      if (!c.empty()) {
        CHECK(bleu4(c, c) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rouge_n(c, c, 1) == 1.0);
        CHECK(rouge_l(c, c) == 1.0);
        if (c.size() >= 2) CHECK(rouge_n(c, c, 2) == 1.0);
      }
    }
  }

  TEST_CASE("score_run counts") {
    std::vector<ScoredItem> items = {
        item("a", ExecutionOutcome::ok(one_row("1")), "1"),
        item("b", ExecutionOutcome::ok(one_row("2")), "2"),
        item("c", ExecutionOutcome::ok(one_row("3")), "4"),
        item("d", ExecutionOutcome::failed(ExecutionStatus::syntax_error, "bad"), "5"),
    };
    const auto rep = score_run(items);
    CHECK(rep.values.relaxed_em_success == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(rep.values.relaxed_em_all == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.n_total == 4);
    CHECK(rep.n_success == 3);
    CHECK(rep.n_match == 2);
    CHECK(rep.n_syntax_fail == 1);
    CHECK(rep.values.bleu4 == doctest::Approx(1.0));
  }

  TEST_CASE("score_run edge cases") {
    CHECK_THROWS_AS(score_run(std::vector<ScoredItem>{}), EmptyRun);
    std::vector<ScoredItem> none = {
        item("a", ExecutionOutcome::ok(ResultTable{{"x"}, {}}), "1"),
        item("b", ExecutionOutcome::failed(ExecutionStatus::timeout, "slow"), "1"),
        item("c", ExecutionOutcome::failed(ExecutionStatus::transport_error, "down"), "1"),
    };
    const auto rep = score_run(none);
    CHECK(rep.values.relaxed_em_success == 0.0);
    CHECK(rep.values.relaxed_em_all == 0.0);
    CHECK(rep.n_empty == 1);
    CHECK(rep.n_exec_fail == 2);

    std::vector<ScoredItem> all = {item("a", ExecutionOutcome::ok(one_row("1")), "1")};
    const auto perfect = score_run(all);
    for (size_t i = 0; i < MetricValues::kCount; ++i) CHECK(perfect.values.get(i) == doctest::Approx(1.0));
  }

  TEST_CASE("score_run invariants on random runs") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> kind(0, 4), val(0, 2);
    for (int t = 0; t < 100; ++t) {
      std::vector<ScoredItem> items;
      const int n = 1 + t % 9;
      for (int i = 0; i < n; ++i) {
        ExecutionOutcome o;
        switch (kind(rng)) {
          case 0: o = ExecutionOutcome::failed(ExecutionStatus::syntax_error, "x"); break;
          case 1: o = ExecutionOutcome::ok(ResultTable{{"x"}, {}}); break;
          case 2: o = ExecutionOutcome::failed(ExecutionStatus::timeout, "x"); break;
          default: o = ExecutionOutcome::ok(one_row(std::to_string(val(rng))));
        }
        auto it = item(std::to_string(i), std::move(o), std::to_string(val(rng)));
        if (i % 3 == 1) it.generated_query = "SELECT ?x WHERE { ?x ?q ?o }";
        items.push_back(std::move(it));
      }
      const auto rep = score_run(items);
      CHECK(rep.values.relaxed_em_all <= rep.values.relaxed_em_success + 1e-12);
      CHECK(rep.n_success + rep.n_empty + rep.n_syntax_fail + rep.n_exec_fail == rep.n_total);

      auto shuffled = items;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto again = score_run(shuffled);
      CHECK(again.values == rep.values);
      CHECK(again.n_match == rep.n_match);
    }
  }

  TEST_CASE("aggregate runs") {
    const std::vector<MetricReport> same(3, with_bleu(0.37));
    const auto a = aggregate_runs(same);
    CHECK(a.runs == 3);
    for (size_t i = 0; i < MetricValues::kCount; ++i) CHECK(a.std.get(i) == 0.0);
    CHECK(a.mean.bleu4 == 0.37);

    const std::vector<MetricReport> spread = {with_bleu(0.1), with_bleu(0.2), with_bleu(0.3)};
    const auto b = aggregate_runs(spread);
    CHECK(b.mean.bleu4 == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(b.std.bleu4 == doctest::Approx(0.081649658).epsilon(1e-9));
    CHECK(b.std.bleu4 == doctest::Approx(oracle::population_std({0.1, 0.2, 0.3})).epsilon(1e-12));
    CHECK(b.std.rouge1 == 0.0);

    const auto single = aggregate_runs(std::vector<MetricReport>{with_bleu(0.4)});
    CHECK(single.mean == with_bleu(0.4).values);
    CHECK(single.std.bleu4 == 0.0);
    CHECK_THROWS_AS(aggregate_runs(std::vector<MetricReport>{}), EmptyList);
  }

  TEST_CASE("aggregate matches two-pass oracle") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      std::vector<MetricReport> reps;
      std::vector<double> xs;
      for (int i = 0; i < 1 + t % 6; ++i) {
        xs.push_back(u(rng));
        reps.push_back(with_bleu(xs.back()));
      }
      const auto a = aggregate_runs(reps);
      CHECK(a.mean.bleu4 == doctest::Approx(oracle::mean(xs)).epsilon(1e-12));
      CHECK(a.std.bleu4 == doctest::Approx(oracle::population_std(xs)).epsilon(1e-9));
    }
  }

  TEST_CASE("metric names and order") {
    const std::vector<std::string> expected = {"BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L",
                                               "RelaxedEM(success)", "RelaxedEM(all)"};
    for (size_t i = 0; i < MetricValues::kCount; ++i) CHECK(MetricValues::name(i) == expected[i]);
  }
}
