#include "sparqlgen/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <iterator>

#include "sparqlgen/classify.hpp"
#include "sparqlgen/config.hpp"
#include "sparqlgen/dataset.hpp"
#include "sparqlgen/errors.hpp"
#include "sparqlgen/execution.hpp"
#include "sparqlgen/llm_client.hpp"
#include "sparqlgen/metrics.hpp"
#include "sparqlgen/pipeline.hpp"
#include "sparqlgen/postprocess.hpp"
#include "sparqlgen/report.hpp"
#include "sparqlgen/sparql.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

namespace {

using nlohmann::json;

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  return read_file(path);
}

// Prompt for a single ad-hoc question, following the configured strategy.
PromptInstance prompt_for(const RunConfig& cfg, const std::string& question) {
  const PromptTemplates templates =
      cfg.templates_dir ? PromptTemplates::load(*cfg.templates_dir) : PromptTemplates::defaults();
  std::shared_ptr<EmbeddingProvider> embedder;
  if (cfg.embedding) {
    auto cache = std::make_shared<ResponseCache>(cfg.cache_dir);
    embedder = std::make_shared<HttpEmbedder>(
        std::make_shared<LlmClient>(*cfg.embedding, cache, 1, cfg.offline_replay));
  } else {
    embedder = std::make_shared<LexicalEmbedder>();
  }
  PromptInstance p;
  switch (cfg.strategy) {
    case Strategy::zero_shot:
    case Strategy::ft:
      p = build_zero_shot_prompt(question, templates);
      break;
    case Strategy::one_shot: {
      const auto split = load_dataset(cfg.dataset_path);
      p = build_one_shot_prompt(question, select_one_shot_example(question, split.train, *embedder),
                                templates);
      break;
    }
    case Strategy::zero_shot_rag:
    case Strategy::ft_rag: {
      const auto catalog = load_property_catalog(*cfg.property_catalog);
      p = build_rag_prompt(
          question, retrieve_properties(question, catalog, static_cast<size_t>(cfg.rag_k), *embedder),
          templates);
      break;
    }
  }
  p.strategy = cfg.strategy;
  return p;
}

json diff_json(const StructuralDiff& d) {
  json pairs = json::array();
  for (const auto& [gold, gen] : d.differing_constants) pairs.push_back({gold, gen});
  return {{"isomorphic", d.isomorphic},
          {"triple_count_delta", d.triple_count_delta},
          {"differing_constants", pairs}};
}

sparql::QueryAst parse_or_throw(const std::string& path) {
  auto parsed = sparql::parse(read_file(path));
  if (!sparql::ok(parsed)) {
    throw ConfigError(path + ": " + format_diagnostics(sparql::diagnostics(parsed)));
  }
  return std::move(std::get<sparql::QueryAst>(parsed));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-to-SPARQL generation and evaluation harness", "sparqlgen"};
  app.set_version_flag("--version", SPARQLGEN_VERSION);
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline described by a config file");
  std::string run_config;
  bool run_offline = false;
  int run_runs = 0;
  std::string run_output;
  run->add_option("--config", run_config, "Run configuration (TOML)")->required();
  run->add_flag("--offline-replay", run_offline, "Serve every model and endpoint call from recordings");
  run->add_option("--runs", run_runs, "Override the number of runs")->check(CLI::PositiveNumber);
  run->add_option("--output", run_output, "Override the output directory");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a query for one question");
  std::string gen_config, gen_question, gen_salt = "0";
  gen->add_option("--config", gen_config, "Run configuration (TOML)")->required();
  gen->add_option("--question", gen_question, "Natural-language question")->required();
  gen->add_option("--salt", gen_salt, "Run salt used in the cache key");

  // clean
  auto* cln = app.add_subcommand("clean", "Extract and clean a query from model output");
  std::string clean_input;
  bool clean_rules = false;
  cln->add_option("input", clean_input, "File with raw model output, or - for stdin")->required();
  cln->add_flag("--rules", clean_rules, "Report applied cleaning rules on stderr");

  // validate
  auto* val = app.add_subcommand("validate", "Parse and validate a query");
  std::string val_input;
  val->add_option("input", val_input, "Query file, or - for stdin")->required();

  // execute
  auto* exe = app.add_subcommand("execute", "Execute a query against a SPARQL endpoint");
  std::string exe_input, exe_endpoint, exe_replay, exe_record;
  double exe_timeout = 60.0;
  bool exe_tsv = false, exe_strict = false;
  exe->add_option("input", exe_input, "Query file, or - for stdin")->required();
  exe->add_option("--endpoint", exe_endpoint, "SPARQL endpoint URL");
  exe->add_option("--timeout", exe_timeout, "Timeout in seconds")->check(CLI::PositiveNumber);
  exe->add_flag("--tsv", exe_tsv, "Request tab-separated results");
  exe->add_flag("--strict", exe_strict, "Keep full RDF term syntax in result cells");
  exe->add_option("--replay", exe_replay, "Serve the response from this recordings directory");
  exe->add_option("--record", exe_record, "Store the raw response in this recordings directory");

  // score
  auto* sc = app.add_subcommand("score", "Score a checkpoint item log");
  std::string score_input;
  sc->add_option("input", score_input, "Item log (JSON lines)")->required()->check(CLI::ExistingFile);

  // report
  auto* rep = app.add_subcommand("report", "Print the summary table of a report.json");
  std::string rep_input;
  rep->add_option("input", rep_input, "report.json")->required()->check(CLI::ExistingFile);

  // diff
  auto* dif = app.add_subcommand("diff", "Structural diff of two queries");
  std::string diff_gold, diff_gen;
  dif->add_option("gold", diff_gold, "Gold query file")->required()->check(CLI::ExistingFile);
  dif->add_option("generated", diff_gen, "Generated query file")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      RunConfig cfg = load_run_config(run_config);
      if (run_offline) {
        if (!cfg.recordings_dir) throw ConfigError("--offline-replay needs 'execution.recordings_dir'");
        cfg.offline_replay = true;
      }
      if (run_runs > 0) cfg.runs = run_runs;
      if (!run_output.empty()) cfg.output_dir = run_output;
      const PipelineResult result = run_pipeline(cfg);
      emit_report(result, cfg.output_dir);
      out << summary_table(report_json(result));
      return kExitOk;
    }
    if (*gen) {
      const RunConfig cfg = load_run_config(gen_config);
      const PromptInstance prompt = prompt_for(cfg, gen_question);
      LlmClient client(cfg.generation, std::make_shared<ResponseCache>(cfg.cache_dir), 1,
                       cfg.offline_replay);
      out << client.generate(prompt, gen_salt).raw_output << "\n";
      return kExitOk;
    }
    if (*cln) {
      const std::string raw = read_input(clean_input);
      std::string query;
      try {
        query = extract_query(raw);
      } catch (const NoQueryFound& e) {
        err << e.what() << "\n";
        return kExitUsage;
      }
      const CleaningReport report = clean(query);
      if (clean_rules) {
        err << "rules:";
        for (const auto& r : report.rules_applied) err << " " << r;
        err << "\n";
      }
      out << report.output;
      if (report.output.empty() || report.output.back() != '\n') out << "\n";
      return kExitOk;
    }
    if (*val) {
      const auto check = sparql::check_query(read_input(val_input));
      if (check.valid()) {
        out << "OK\n";
      } else {
        for (const auto& d : check.diagnostics) {
          out << sparql::to_string(d.code) << "\t" << (d.offset ? std::to_string(*d.offset) : "-")
              << "\t" << d.message << "\n";
        }
      }
      return kExitOk;
    }
    if (*exe) {
      ExecutionOptions options;
      options.timeout = std::chrono::duration<double>(exe_timeout);
      options.format = exe_tsv ? ResultFormat::tsv : ResultFormat::json;
      options.strict_literals = exe_strict;
      const std::string query = read_input(exe_input);
      ExecutionOutcome outcome;
      if (!exe_replay.empty()) {
        outcome = ReplayExecutor(std::make_shared<ResponseCache>(exe_replay), options).execute(query);
      } else {
        if (exe_endpoint.empty()) throw ConfigError("execute needs --endpoint or --replay");
        std::shared_ptr<const ResponseCache> recorder;
        if (!exe_record.empty()) recorder = std::make_shared<ResponseCache>(exe_record);
        outcome = HttpExecutor(exe_endpoint, options, recorder).execute(query);
      }
      out << "status\t" << to_string(outcome.status) << "\n";
      if (!outcome.message.empty()) out << "message\t" << outcome.message << "\n";
      if (outcome.table) {
        out << "rows\t" << outcome.table->rows.size() << "\n";
        for (size_t i = 0; i < outcome.table->vars.size(); ++i) {
          out << (i ? "\t" : "") << "?" << outcome.table->vars[i];
        }
        out << "\n";
        for (const auto& row : outcome.table->rows) {
          for (size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
          out << "\n";
        }
      }
      const bool reached = outcome.status == ExecutionStatus::success ||
                           outcome.status == ExecutionStatus::syntax_error;
      return reached ? kExitOk : kExitAbort;
    }
    if (*sc) {
      const auto records = read_item_log(score_input);
      std::vector<ScoredItem> items;
      for (const auto& r : records) items.push_back(to_scored_item(r));
      const MetricReport m = score_run(items);
      json metrics = json::object();
      for (size_t i = 0; i < MetricValues::kCount; ++i) metrics[MetricValues::name(i)] = m.values.get(i);
      const ErrorBreakdown b = breakdown_of(records);
      json cats = json::object();
      for (auto c : kAllCategories) cats[to_string(c)] = b.count(c);
      out << json{{"metrics", metrics},
                  {"n_total", m.n_total},
                  {"n_success", m.n_success},
                  {"n_match", m.n_match},
                  {"n_syntax_fail", m.n_syntax_fail},
                  {"n_empty", m.n_empty},
                  {"n_exec_fail", m.n_exec_fail},
                  {"categories", cats}}
                 .dump(2)
          << "\n";
      return kExitOk;
    }
    if (*rep) {
      json report;
      try {
        report = json::parse(read_file(rep_input));
      } catch (const json::exception& e) {
        throw MalformedFile(rep_input + ": " + e.what());
      }
      out << summary_table(report);
      return kExitOk;
    }
    if (*dif) {
      const auto gold = parse_or_throw(diff_gold);
      const auto generated = parse_or_throw(diff_gen);
      out << diff_json(structural_diff(generated, gold)).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MalformedFile& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DuplicateId& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitAbort;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace sparqlgen
