#include <doctest.h>

#include "helpers.hpp"
#include "sparqlgen/dataset.hpp"
#include "sparqlgen/errors.hpp"

using namespace sparqlgen;

namespace {

const char* kSmall = R"({
  "train": [
    {"id": "a", "question": "q a", "paraphrases": [], "gold_query": "SELECT ?x WHERE { ?x ?p ?o }",
     "gold_results": null, "origin": "handcrafted"},
    {"id": "b", "question": "q b", "paraphrases": ["pb"], "gold_query": "SELECT ?x WHERE { ?x ?p ?o }",
     "gold_results": {"vars": ["x"], "rows": [["1"], ["2"]]}, "origin": "auto_generated"}
  ],
  "test": [
    {"id": "c", "question": "q c", "paraphrases": ["p1", "p2"], "gold_query": "SELECT ?y WHERE { ?y ?p ?o }",
     "gold_results": null, "origin": "handcrafted"}
  ]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("loads split sizes and fields") {
    const auto split = parse_dataset(kSmall);
    CHECK(split.train.size() == 2);
    CHECK(split.test.size() == 1);
    CHECK(split.train[1].origin == Origin::auto_generated);
    REQUIRE(split.train[1].gold_results);
    CHECK(split.train[1].gold_results->rows.size() == 2);
    CHECK_FALSE(split.train[0].gold_results);
    CHECK(split.test[0].paraphrases == std::vector<std::string>{"p1", "p2"});
  }

  TEST_CASE("loading is deterministic") {
    CHECK(parse_dataset(kSmall) == parse_dataset(kSmall));
  }

  TEST_CASE("load_dataset reads files and reports missing ones") {
    testing::TempDir dir;
    write_file_atomic(dir / "d.json", kSmall);
    CHECK(load_dataset(dir / "d.json").test.at(0).id == "c");
    CHECK_THROWS_AS(load_dataset(dir / "missing.json"), Error);
  }

  TEST_CASE("missing key is named") {
    const auto bad = replace(kSmall, R"("question": "q c", )", "");
    try {
      parse_dataset(bad);
      FAIL("expected MalformedFile");
    } catch (const MalformedFile& e) {
      CHECK(std::string(e.what()).find("question") != std::string::npos);
    }
  }

  TEST_CASE("invalid JSON and wrong shapes") {
    CHECK_THROWS_AS(parse_dataset("{not json"), MalformedFile);
    CHECK_THROWS_AS(parse_dataset("[]"), MalformedFile);
    CHECK_THROWS_AS(parse_dataset(replace(kSmall, R"("origin": "auto_generated")", R"("origin": "robot")")),
                    MalformedFile);
    CHECK_THROWS_AS(parse_dataset(replace(kSmall, R"([["1"], ["2"]])", R"([["1", "x"]])")),
                    MalformedFile);
  }

  TEST_CASE("duplicate ids across splits") {
    try {
      parse_dataset(replace(kSmall, R"("id": "c")", R"("id": "a")"));
      FAIL("expected DuplicateId");
    } catch (const DuplicateId& e) {
      CHECK(std::string(e.what()) == "a");
    }
  }

  TEST_CASE("empty question or query is rejected") {
    CHECK_THROWS_AS(parse_dataset(replace(kSmall, R"("question": "q c")", R"("question": "  ")")),
                    MalformedFile);
  }

  TEST_CASE("validate_example") {
    QAExample ex{"x", "question?", {}, "SELECT * WHERE { ?s ?p ?o }", std::nullopt, Origin::handcrafted};
    CHECK(validate_example(ex).empty());
    ex.question = "";
    CHECK(validate_example(ex) == std::vector<std::string>{"question empty"});
    ex.question = "q";
    ex.gold_query = "";
    CHECK(validate_example(ex) == std::vector<std::string>{"gold_query empty"});
  }

  TEST_CASE("paraphrase expansion") {
    const auto split = parse_dataset(kSmall);
    const auto expanded = expand_paraphrases(split.test);
    REQUIRE(expanded.size() == 3);
    CHECK(expanded[0].id == "c");
    CHECK(expanded[1].id == "c#p1");
    CHECK(expanded[1].question == "p1");
    CHECK(expanded[2].id == "c#p2");
    CHECK(expanded[2].gold_query == split.test[0].gold_query);
  }
}
