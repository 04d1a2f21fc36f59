#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "sparqlgen/execution.hpp"
#include "sparqlgen/llm_client.hpp"
#include "sparqlgen/prompting.hpp"

namespace sparqlgen {

// Flat view of a TOML subset: [section] headers, key = value pairs with
// basic/literal strings, integers, floats and booleans, '#' comments. Keys are
// "section.key" (or just "key" before the first header).
using ConfigValue = std::variant<std::string, std::int64_t, double, bool>;
using ConfigTable = std::map<std::string, ConfigValue>;

// Throws ConfigError with the offending line number.
ConfigTable parse_config_text(std::string_view text);

struct RunConfig {
  Strategy strategy = Strategy::zero_shot;
  std::filesystem::path dataset_path;
  std::string sparql_endpoint;
  int runs = 3;
  int rag_k = 10;
  std::optional<std::filesystem::path> property_catalog;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path output_dir = "out";
  int concurrency = 4;
  bool offline_replay = false;
  bool expand_paraphrases = false;
  std::optional<std::filesystem::path> templates_dir;

  // Report labels.
  std::string model_label;
  std::string epoch;

  LlmEndpointConfig generation;
  std::optional<LlmEndpointConfig> correction;  // one correction round when set
  std::optional<LlmEndpointConfig> embedding;   // lexical embedder when unset

  ExecutionOptions execution;
  // Recorded endpoint responses; replayed when offline_replay is set,
  // written when record_responses is set.
  std::optional<std::filesystem::path> recordings_dir;
  bool record_responses = false;
};

// Relative paths are resolved against `base_dir`. Throws ConfigError.
RunConfig run_config_from_table(const ConfigTable& table, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Snapshot for the manifest; API keys are omitted.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace sparqlgen
