#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixture_store.hpp"
#include "helpers.hpp"
#include "mock_llm.hpp"
#include "scenario.hpp"
#include "sparqlgen/cli.hpp"

using namespace sparqlgen;

namespace {

struct Invocation {
  int code = -1;
  std::string out, err;
};

Invocation cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fx(const std::string& rel) { return (testing::fixtures() / rel).string(); }

std::shared_ptr<const testing::FixtureStore> store() {
  static const auto s = std::make_shared<const testing::FixtureStore>(
      testing::FixtureStore::from_ntriples(testing::fixture_text("store.nt")));
  return s;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"validate"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({"--version"}).code == kExitOk);
    const auto missing = cli({"run", "--config", "/nonexistent/run.toml"});
    CHECK(missing.code == kExitUsage);
    CHECK(missing.err.find("cannot read config file") != std::string::npos);
  }

  TEST_CASE("validate") {
    const auto ok = cli({"validate", fx("queries/q08_subquery_best.rq")});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out == "OK\n");
    const auto bad = cli({"validate", fx("cli/ungrouped.rq")});
    CHECK(bad.code == kExitOk);
    CHECK(bad.out.starts_with("AggregationUngroupedVar\t"));
  }

  TEST_CASE("clean") {
    testing::TempDir dir;
    write(dir / "raw.txt", "Here you go:\n```sparql\nSELECT ?a?b WHERE { ?a ?p ?b };\n```\n");
    const auto r = cli({"clean", (dir / "raw.txt").string(), "--rules"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "SELECT ?a ?b WHERE { ?a ?p ?b }\n");
    CHECK(r.err == "rules: r3 r5\n");
    write(dir / "none.txt", "No idea, sorry.");
    CHECK(cli({"clean", (dir / "none.txt").string()}).code == kExitUsage);
  }

  TEST_CASE("diff") {
    testing::TempDir dir;
    write(dir / "gold.rq", "SELECT ?m WHERE { ?p <http://x/P31> ?c . ?c <http://x/P15687> ?m }");
    write(dir / "gen.rq", "SELECT ?m WHERE { ?p <http://x/P31> ?c . ?c <http://x/P7101> ?m }");
    const auto r = cli({"diff", (dir / "gold.rq").string(), (dir / "gen.rq").string()});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["isomorphic"] == true);
    CHECK(j["differing_constants"][0][0] == "<http://x/P15687>");
    CHECK(j["differing_constants"][0][1] == "<http://x/P7101>");
    CHECK(cli({"diff", fx("cli/ungrouped.rq"), (dir / "nope.rq").string()}).code == kExitUsage);
  }

  TEST_CASE("execute, record and replay") {
    testing::TempDir dir;
    const std::string rec = (dir / "rec").string();
    {
      testing::FixtureServer server(store());
      const auto live = cli({"execute", fx("queries/q03_count_benchmarks.rq"), "--endpoint", server.url(), "--record", rec});
      CHECK(live.code == kExitOk);
      CHECK(live.out.starts_with("status\tsuccess\nrows\t"));
      const auto rejected = cli({"execute", fx("cli/ungrouped.rq"), "--endpoint", server.url()});
      CHECK(rejected.code == kExitOk);
      CHECK(rejected.out.find("status\tsyntax_error") != std::string::npos);
    }
    const auto replay = cli({"execute", fx("queries/q03_count_benchmarks.rq"), "--replay", rec});
    CHECK(replay.code == kExitOk);
    CHECK(replay.out.starts_with("status\tsuccess\nrows\t"));
    CHECK(cli({"execute", fx("cli/ungrouped.rq"), "--replay", rec}).code == kExitAbort);
    CHECK(cli({"execute", fx("cli/ungrouped.rq"), "--endpoint", "http://127.0.0.1:1/sparql", "--timeout", "2"}).code ==
          kExitAbort);
    CHECK(cli({"execute", fx("cli/ungrouped.rq")}).code == kExitUsage);
  }

  TEST_CASE("run, report and score") {
    testing::TempDir dir;
    const auto dataset = testing::fixtures() / "replay/dataset.json";
    testing::MockLlmServer llm(testing::answer_by_question(testing::gold_answers(dataset)));
    testing::FixtureServer server(store());
    write(dir / "run.toml", "strategy = \"zero_shot\"\n"
                            "dataset = \"" + dataset.string() + "\"\n"
                            "sparql_endpoint = \"" + server.url() + "\"\n"
                            "runs = 2\n"
                            "model_label = \"mock\"\n"
                            "[generation]\n"
                            "base_url = \"" + llm.base_url() + "\"\n"
                            "model = \"mock-model\"\n"
                            "max_retries = 0\n");
    const auto run = cli({"run", "--config", (dir / "run.toml").string(), "--runs", "1", "--output",
                          (dir / "report").string()});
    REQUIRE_MESSAGE(run.code == kExitOk, run.err);
    CHECK(run.out.find("zero_shot | mock |  | 0 | 1.00 | 1.00 | 1.00 | 1.00 | 1.00 | 1.00") != std::string::npos);
    CHECK(llm.chat_calls() == 5);

    const auto rep = cli({"report", (dir / "report/report.json").string()});
    CHECK(rep.code == kExitOk);
    CHECK(rep.out == run.out);

    const auto sc = cli({"score", (dir / "report/checkpoint/run0.jsonl").string()});
    REQUIRE(sc.code == kExitOk);
    const auto j = nlohmann::json::parse(sc.out);
    CHECK(j["n_match"] == 5);
    CHECK(j["categories"]["Correct"] == 5);
    CHECK(j["metrics"]["RelaxedEM(all)"] == 1.0);

    CHECK(cli({"run", "--config", (dir / "run.toml").string(), "--offline-replay"}).code == kExitUsage);
  }

  TEST_CASE("generate uses the configured model") {
    testing::TempDir dir;
    testing::MockLlmServer llm([](const nlohmann::json& req) {
      return testing::MockLlmServer::Reply{200, "SELECT * WHERE { ?s ?p ?o } # " + req.at("model").get<std::string>()};
    });
    write(dir / "run.toml", "strategy = \"zero_shot\"\ndataset = \"unused.json\"\n"
                            "sparql_endpoint = \"http://x/sparql\"\n[generation]\n"
                            "base_url = \"" + llm.base_url() + "\"\nmodel = \"gen-model\"\n");
    const auto r = cli({"generate", "--config", (dir / "run.toml").string(), "--question", "Anything?"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "SELECT * WHERE { ?s ?p ?o } # gen-model\n");
    REQUIRE(llm.chat_calls() == 1);
    CHECK(testing::user_message(llm.chat_requests()[0]).find("Anything?") != std::string::npos);
  }
}
