#include "sparqlgen/pipeline.hpp"

#include <atomic>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "sparqlgen/dataset.hpp"
#include "sparqlgen/errors.hpp"
#include "sparqlgen/llm_client.hpp"
#include "sparqlgen/postprocess.hpp"
#include "sparqlgen/prompting.hpp"
#include "sparqlgen/sparql/analysis.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

using nlohmann::json;
using sparql::Diagnostic;
using sparql::DiagnosticCode;

namespace {

std::optional<DiagnosticCode> parse_diagnostic_code(std::string_view s) {
  for (auto c : {DiagnosticCode::AggregationUngroupedVar, DiagnosticCode::MalformedSubquery,
                 DiagnosticCode::UnknownPrefix, DiagnosticCode::GeneralSyntax,
                 DiagnosticCode::UnsupportedForm}) {
    if (s == sparql::to_string(c)) return c;
  }
  return std::nullopt;
}

json outcome_json(const ExecutionOutcome& o) {
  json j = {{"status", to_string(o.status)},
            {"message", o.message},
            {"elapsed_seconds", o.elapsed_seconds}};
  if (o.table) j["table"] = {{"vars", o.table->vars}, {"rows", o.table->rows}};
  return j;
}

ExecutionOutcome outcome_from_json(const json& j) {
  ExecutionOutcome o;
  const auto status = parse_execution_status(j.at("status").get<std::string>());
  if (!status) throw MalformedFile("unknown execution status in item log");
  o.status = *status;
  o.message = j.value("message", "");
  o.elapsed_seconds = j.value("elapsed_seconds", 0.0);
  if (j.contains("table")) {
    ResultTable t;
    t.vars = j["table"].at("vars").get<std::vector<std::string>>();
    t.rows = j["table"].at("rows").get<std::vector<std::vector<std::string>>>();
    o.table = std::move(t);
  }
  return o;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Per test item state shared by all runs.
struct PreparedItem {
  const QAExample* example = nullptr;
  PromptInstance prompt;
  NormalizedResultSet gold;
  std::optional<sparql::QueryAst> gold_ast;
};

bool is_abort_error(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const TransportError&) {
    return true;
  } catch (const TimeoutError&) {
    return true;
  } catch (const EndpointError&) {
    return true;
  } catch (const CacheMiss&) {
    return true;
  } catch (...) {
    return false;
  }
}

std::string what_of(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

class Runner {
 public:
  Runner(const RunConfig& cfg, const PipelineHooks& hooks) : cfg_(cfg), hooks_(hooks) {
    if (!hooks_.log) hooks_.log = [](const std::string& m) { std::cerr << "sparqlgen: " << m << "\n"; };
  }

  PipelineResult run() {
    PipelineResult result;
    result.config = cfg_;
    result.manifest.started_at = utc_now();
    prepare(result.manifest);

    const auto checkpoint_dir = cfg_.output_dir / "checkpoint";
    reset_checkpoints_if_stale(checkpoint_dir, fingerprint(result.manifest));

    for (int run = 0; run < cfg_.runs; ++run) {
      result.manifest.run_salts.push_back(run_salt(run));
      auto records = run_once(run, checkpoint_dir / ("run" + std::to_string(run) + ".jsonl"));
      std::vector<ScoredItem> scored;
      scored.reserve(records.size());
      for (const auto& r : records) scored.push_back(to_scored_item(r));
      result.reports.push_back(score_run(scored));
      result.breakdowns.push_back(breakdown_of(records));
      result.records.push_back(std::move(records));
    }
    result.aggregate = aggregate_runs(result.reports);
    result.manifest.finished_at = utc_now();
    return result;
  }

 private:
  void prepare(RunManifest& manifest) {
    const std::string dataset_bytes = read_file(cfg_.dataset_path);
    const DatasetSplit split = parse_dataset(dataset_bytes);
    train_ = split.train;
    test_ = cfg_.expand_paraphrases ? expand_paraphrases(split.test) : split.test;
    if (test_.empty()) throw ConfigError("dataset has no test items");

    templates_ = cfg_.templates_dir ? PromptTemplates::load(*cfg_.templates_dir)
                                    : PromptTemplates::defaults();
    manifest.config = to_json(cfg_);
    manifest.dataset_digest = sha256_hex(dataset_bytes);
    manifest.template_digests = templates_.digests();
    manifest.tool_version = SPARQLGEN_VERSION;
    manifest.tokenizer_version = kTokenizerVersion;
    manifest.n_test_items = test_.size();

    cache_ = std::make_shared<ResponseCache>(cfg_.cache_dir);
    const auto in_flight = static_cast<size_t>(cfg_.concurrency);
    generator_ = std::make_shared<LlmClient>(cfg_.generation, cache_, in_flight, cfg_.offline_replay);
    if (cfg_.correction) {
      corrector_ = std::make_shared<LlmClient>(*cfg_.correction, cache_, in_flight, cfg_.offline_replay);
    }

    executor_ = hooks_.executor;
    if (!executor_) {
      std::shared_ptr<const ResponseCache> recordings;
      if (cfg_.recordings_dir) recordings = std::make_shared<ResponseCache>(*cfg_.recordings_dir);
      if (cfg_.offline_replay) {
        executor_ = std::make_shared<ReplayExecutor>(recordings, cfg_.execution);
      } else {
        executor_ = std::make_shared<HttpExecutor>(cfg_.sparql_endpoint, cfg_.execution,
                                                   cfg_.record_responses ? recordings : nullptr);
      }
    }

    std::shared_ptr<EmbeddingProvider> embedder = hooks_.embedder;
    if (!embedder) {
      if (cfg_.embedding) {
        embedder = std::make_shared<HttpEmbedder>(std::make_shared<LlmClient>(
            *cfg_.embedding, cache_, in_flight, cfg_.offline_replay));
      } else {
        embedder = std::make_shared<LexicalEmbedder>();
      }
    }

    std::vector<PropertyCatalogEntry> catalog;
    if (uses_rag(cfg_.strategy)) {
      manifest.catalog_digest = sha256_hex(read_file(*cfg_.property_catalog));
      catalog = load_property_catalog(*cfg_.property_catalog);
    }

    prepared_.resize(test_.size());
    try {
      for (size_t i = 0; i < test_.size(); ++i) {
        const QAExample& ex = test_[i];
        PreparedItem& p = prepared_[i];
        p.example = &ex;
        switch (cfg_.strategy) {
          case Strategy::zero_shot:
          case Strategy::ft:
            p.prompt = build_zero_shot_prompt(ex.question, templates_);
            break;
          case Strategy::one_shot:
            p.prompt = build_one_shot_prompt(
                ex.question, select_one_shot_example(ex.question, train_, *embedder), templates_);
            break;
          case Strategy::zero_shot_rag:
          case Strategy::ft_rag: {
            const auto props =
                retrieve_properties(ex.question, catalog, static_cast<size_t>(cfg_.rag_k), *embedder);
            p.prompt = build_rag_prompt(ex.question, props, templates_);
            break;
          }
        }
        p.prompt.strategy = cfg_.strategy;
        p.gold_ast = sparql::check_query(ex.gold_query).ast;
        p.gold = gold_results(ex);
      }
    } catch (const CacheMiss& e) {
      throw RunAborted(std::string("preparing prompts: ") + e.what());
    } catch (const TransportError& e) {
      throw RunAborted(std::string("preparing prompts: ") + e.what());
    } catch (const EndpointError& e) {
      throw RunAborted(std::string("preparing prompts: ") + e.what());
    }
  }

  NormalizedResultSet gold_results(const QAExample& ex) {
    if (ex.gold_results) return normalize_results(*ex.gold_results);
    const ExecutionOutcome o = executor_->execute(ex.gold_query);
    if (o.status != ExecutionStatus::success) {
      hooks_.log("gold query of " + ex.id + " failed (" + to_string(o.status) + "): " + o.message);
      return {};
    }
    return normalize_results(*o.table);
  }

  std::string fingerprint(const RunManifest& m) const {
    json snapshot = m.config;
    snapshot.erase("concurrency");
    snapshot.erase("offline_replay");
    // The same model may be served from another address.
    for (const char* section : {"generation", "correction", "embedding"}) {
      if (snapshot.contains(section)) snapshot[section].erase("base_url");
    }
    json j = {{"config", snapshot},
              {"dataset", m.dataset_digest},
              {"templates", m.template_digests},
              {"catalog", m.catalog_digest.value_or("")},
              {"version", m.tool_version}};
    return sha256_hex(j.dump());
  }

  void reset_checkpoints_if_stale(const std::filesystem::path& dir, const std::string& fp) {
    const auto fp_path = dir / "fingerprint";
    std::error_code ec;
    if (std::filesystem::exists(fp_path, ec)) {
      if (std::string(trim(read_file(fp_path))) == fp) return;
      hooks_.log("configuration changed; discarding checkpoint in " + dir.string());
    }
    std::filesystem::remove_all(dir, ec);
    std::filesystem::create_directories(dir);
    write_file_atomic(fp_path, fp + "\n");
  }

  std::vector<ItemRecord> run_once(int run, const std::filesystem::path& log_path) {
    std::vector<std::optional<ItemRecord>> slots(test_.size());
    {
      std::map<std::string, size_t> index;
      for (size_t i = 0; i < test_.size(); ++i) index[test_[i].id] = i;
      std::error_code ec;
      if (std::filesystem::exists(log_path, ec)) {
        for (auto& r : read_item_log(log_path)) {
          auto it = index.find(r.id);
          if (it != index.end()) slots[it->second] = std::move(r);
        }
      }
    }
    std::vector<size_t> todo;
    for (size_t i = 0; i < slots.size(); ++i) {
      if (!slots[i]) todo.push_back(i);
    }
    if (todo.size() < slots.size()) {
      hooks_.log("run " + std::to_string(run) + ": resuming, " +
                 std::to_string(slots.size() - todo.size()) + " items from checkpoint");
    }

    std::ofstream log(log_path, std::ios::app | std::ios::binary);
    if (!log) throw IoError("cannot open checkpoint log " + log_path.string());
    std::mutex mu;
    std::atomic<size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    const std::string salt = run_salt(run);

    auto worker = [&] {
      while (!stop.load()) {
        const size_t k = next.fetch_add(1);
        if (k >= todo.size()) return;
        const size_t i = todo[k];
        try {
          ItemRecord rec = process(prepared_[i], salt);
          const std::string line = to_json(rec).dump() + "\n";
          std::lock_guard lock(mu);
          log << line;
          log.flush();
          slots[i] = std::move(rec);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      const size_t n = std::min<size_t>(static_cast<size_t>(cfg_.concurrency), std::max<size_t>(todo.size(), 1));
      for (size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    if (error) {
      if (is_abort_error(error)) {
        throw RunAborted("run " + std::to_string(run) + " aborted: " + what_of(error) +
                         " (completed items are kept in " + log_path.string() + ")");
      }
      std::rethrow_exception(error);
    }

    std::vector<ItemRecord> records;
    records.reserve(slots.size());
    for (auto& s : slots) records.push_back(std::move(*s));
    return records;
  }

  ItemRecord process(const PreparedItem& p, const std::string& salt) {
    const QAExample& ex = *p.example;
    ItemRecord r;
    r.id = ex.id;
    r.question = ex.question;
    r.prompt_digest = sha256_hex(p.prompt.user_text);
    r.example_id = p.prompt.provenance.example_id;
    r.property_uris = p.prompt.provenance.property_uris;
    r.gold_query = ex.gold_query;
    r.gold = p.gold;

    try {
      r.raw_output = generator_->generate(p.prompt, salt).raw_output;
    } catch (const EmptyCompletion& e) {
      hooks_.log(ex.id + ": " + e.what());
    }

    ItemEvidence ev;
    ev.checked = true;
    std::optional<std::string> extracted;
    try {
      extracted = extract_query(r.raw_output);
    } catch (const NoQueryFound&) {
      r.final_query = std::string(trim(r.raw_output));
      ev.diagnostics.push_back(
          Diagnostic{DiagnosticCode::GeneralSyntax, "no SPARQL query found in model output", std::nullopt});
    }

    if (extracted) {
      const CleaningReport cleaned = clean(*extracted);
      r.cleaned_query = cleaned.output;
      r.cleaning_rules = cleaned.rules_applied;
      std::string query = cleaned.output;
      auto check = sparql::check_query(query);
      if (!check.valid() && corrector_) {
        const Generator gen = [&](const PromptInstance& prompt) {
          try {
            return corrector_->generate(prompt, salt).raw_output;
          } catch (const EmptyCompletion&) {
            return std::string();
          }
        };
        const CorrectionResult corr = llm_correct(query, check.diagnostics, gen, templates_);
        r.corrected = corr.corrected;
        r.correction_failure = corr.failure;
        if (corr.corrected) {
          query = corr.query;
          check = sparql::check_query(query);
        }
      }
      r.final_query = query;
      ev.diagnostics = std::move(check.diagnostics);
      ev.ast = std::move(check.ast);
    }
    r.diagnostics = ev.diagnostics;

    if (ev.diagnostics.empty()) {
      r.outcome = executor_->execute(r.final_query);
      ev.execution = r.outcome;
      if (r.outcome.status == ExecutionStatus::success && !is_empty(r.outcome)) {
        r.match = relaxed_em_pair(normalize_results(*r.outcome.table), r.gold);
        ev.match = r.match;
      }
    } else {
      r.outcome = ExecutionOutcome::failed(ExecutionStatus::syntax_error, ev.diagnostics.front().message);
    }

    const Classification cls = classify(ev, p.gold_ast ? &*p.gold_ast : nullptr);
    r.category = cls.category;
    r.category_message = cls.message;
    return r;
  }

  RunConfig cfg_;
  PipelineHooks hooks_;
  std::vector<QAExample> train_;
  std::vector<QAExample> test_;
  PromptTemplates templates_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<LlmClient> generator_;
  std::shared_ptr<LlmClient> corrector_;
  std::shared_ptr<QueryExecutor> executor_;
  std::vector<PreparedItem> prepared_;
};

}  // namespace

json to_json(const ItemRecord& r) {
  json diags = json::array();
  for (const auto& d : r.diagnostics) {
    diags.push_back({{"code", sparql::to_string(d.code)},
                     {"message", d.message},
                     {"offset", d.offset ? json(*d.offset) : json(nullptr)}});
  }
  json j = {{"id", r.id},
            {"question", r.question},
            {"prompt_digest", r.prompt_digest},
            {"example_id", r.example_id ? json(*r.example_id) : json(nullptr)},
            {"property_uris", r.property_uris},
            {"raw_output", r.raw_output},
            {"cleaned_query", r.cleaned_query},
            {"cleaning_rules", r.cleaning_rules},
            {"corrected", r.corrected},
            {"correction_failure", r.correction_failure ? json(*r.correction_failure) : json(nullptr)},
            {"final_query", r.final_query},
            {"diagnostics", diags},
            {"outcome", outcome_json(r.outcome)},
            {"match", r.match},
            {"category", to_string(r.category)},
            {"category_message", r.category_message},
            {"gold_query", r.gold_query},
            {"gold", r.gold.lines}};
  return j;
}

ItemRecord item_record_from_json(const json& j) {
  ItemRecord r;
  r.id = j.at("id").get<std::string>();
  r.question = j.value("question", "");
  r.prompt_digest = j.value("prompt_digest", "");
  if (j.contains("example_id") && j["example_id"].is_string()) r.example_id = j["example_id"].get<std::string>();
  r.property_uris = j.value("property_uris", std::vector<std::string>{});
  r.raw_output = j.value("raw_output", "");
  r.cleaned_query = j.value("cleaned_query", "");
  r.cleaning_rules = j.value("cleaning_rules", std::vector<std::string>{});
  r.corrected = j.value("corrected", false);
  if (j.contains("correction_failure") && j["correction_failure"].is_string()) {
    r.correction_failure = j["correction_failure"].get<std::string>();
  }
  r.final_query = j.at("final_query").get<std::string>();
  for (const auto& d : j.value("diagnostics", json::array())) {
    const auto code = parse_diagnostic_code(d.at("code").get<std::string>());
    if (!code) throw MalformedFile("unknown diagnostic code in item log");
    Diagnostic diag{*code, d.value("message", ""), std::nullopt};
    if (d.contains("offset") && d["offset"].is_number()) diag.offset = d["offset"].get<size_t>();
    r.diagnostics.push_back(std::move(diag));
  }
  r.outcome = outcome_from_json(j.at("outcome"));
  r.match = j.value("match", false);
  const auto category = parse_error_category(j.at("category").get<std::string>());
  if (!category) throw MalformedFile("unknown error category in item log");
  r.category = *category;
  r.category_message = j.value("category_message", "");
  r.gold_query = j.at("gold_query").get<std::string>();
  for (const auto& line : j.value("gold", std::vector<std::string>{})) r.gold.lines.insert(line);
  return r;
}

std::vector<ItemRecord> read_item_log(const std::filesystem::path& path) {
  std::vector<ItemRecord> out;
  const auto lines = split_lines(read_file(path));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      out.push_back(item_record_from_json(json::parse(lines[i])));
    } catch (const json::exception& e) {
      if (i + 1 == lines.size()) break;  // torn write from an interrupted run
      throw MalformedFile(path.string() + ": line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

ScoredItem to_scored_item(const ItemRecord& r) {
  return ScoredItem{r.id, r.final_query, r.gold_query, r.outcome, r.gold};
}

size_t ErrorBreakdown::total() const {
  size_t t = 0;
  for (size_t c : counts) t += c;
  return t;
}

ErrorBreakdown breakdown_of(const std::vector<ItemRecord>& records) {
  ErrorBreakdown b;
  for (const auto& r : records) {
    ++b.counts[static_cast<size_t>(r.category)];
    b.entries.push_back({r.id, r.category, r.category_message});
  }
  return b;
}

json to_json(const RunManifest& m) {
  json templates = json::object();
  for (const auto& [name, digest] : m.template_digests) templates[name] = digest;
  return {{"tool_version", m.tool_version},
          {"tokenizer_version", m.tokenizer_version},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at},
          {"dataset_digest", m.dataset_digest},
          {"catalog_digest", m.catalog_digest ? json(*m.catalog_digest) : json(nullptr)},
          {"template_digests", templates},
          {"run_salts", m.run_salts},
          {"n_test_items", m.n_test_items},
          {"config", m.config}};
}

std::string run_salt(int run_index) { return std::to_string(run_index); }

PipelineResult run_pipeline(const RunConfig& cfg, const PipelineHooks& hooks) {
  return Runner(cfg, hooks).run();
}

}  // namespace sparqlgen
