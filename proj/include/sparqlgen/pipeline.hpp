#pragma once

#include <array>
#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sparqlgen/classify.hpp"
#include "sparqlgen/config.hpp"
#include "sparqlgen/embedding.hpp"
#include "sparqlgen/execution.hpp"
#include "sparqlgen/metrics.hpp"
#include "sparqlgen/sparql/lexer.hpp"

namespace sparqlgen {

// Everything recorded for one test item in one run. One JSON line per record
// forms the checkpoint log.
struct ItemRecord {
  std::string id;
  std::string question;
  std::string prompt_digest;
  std::optional<std::string> example_id;
  std::vector<std::string> property_uris;
  std::string raw_output;
  std::string cleaned_query;
  std::vector<std::string> cleaning_rules;
  bool corrected = false;
  std::optional<std::string> correction_failure;
  std::string final_query;
  std::vector<sparql::Diagnostic> diagnostics;
  ExecutionOutcome outcome;
  bool match = false;
  ErrorCategory category = ErrorCategory::SyntaxOther;
  std::string category_message;
  std::string gold_query;
  NormalizedResultSet gold;
};

nlohmann::json to_json(const ItemRecord& r);
ItemRecord item_record_from_json(const nlohmann::json& j);

// Reads a checkpoint log; a torn final line is ignored.
std::vector<ItemRecord> read_item_log(const std::filesystem::path& path);

ScoredItem to_scored_item(const ItemRecord& r);

struct ErrorEntry {
  std::string id;
  ErrorCategory category = ErrorCategory::SyntaxOther;
  std::string message;
};

struct ErrorBreakdown {
  std::array<size_t, kAllCategories.size()> counts{};  // indexed like kAllCategories
  std::vector<ErrorEntry> entries;                     // every item, in test order

  size_t count(ErrorCategory c) const { return counts[static_cast<size_t>(c)]; }
  size_t total() const;
};

ErrorBreakdown breakdown_of(const std::vector<ItemRecord>& records);

struct RunManifest {
  nlohmann::json config;
  std::string dataset_digest;
  std::optional<std::string> catalog_digest;
  std::vector<std::pair<std::string, std::string>> template_digests;
  std::vector<std::string> run_salts;
  std::string started_at;
  std::string finished_at;
  std::string tool_version;
  std::string tokenizer_version;
  size_t n_test_items = 0;
};

nlohmann::json to_json(const RunManifest& m);

struct PipelineResult {
  RunConfig config;
  std::vector<MetricReport> reports;  // one per run
  RunAggregate aggregate;
  std::vector<ErrorBreakdown> breakdowns;  // one per run
  std::vector<std::vector<ItemRecord>> records;
  RunManifest manifest;
};

// Optional replacements for the collaborators the runner would otherwise
// build from the config.
struct PipelineHooks {
  std::shared_ptr<QueryExecutor> executor;
  std::shared_ptr<EmbeddingProvider> embedder;
  std::function<void(const std::string&)> log;  // defaults to stderr
};

// Run salt for run index i ("0", "1", ...); part of the generation cache key.
std::string run_salt(int run_index);

// Generates, cleans, validates, optionally corrects, executes, classifies and
// scores every test item cfg.runs times. Items already present in the
// checkpoint log of an identical configuration are not redone. Throws
// RunAborted when the language model endpoint stays unreachable or, in
// offline replay, a response is missing from the cache.
PipelineResult run_pipeline(const RunConfig& cfg, const PipelineHooks& hooks = {});

}  // namespace sparqlgen
