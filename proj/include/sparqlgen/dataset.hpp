#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparqlgen/results.hpp"

namespace sparqlgen {

enum class Origin { handcrafted, auto_generated };

const char* to_string(Origin origin);

// One benchmark record.
struct QAExample {
  std::string id;
  std::string question;
  std::vector<std::string> paraphrases;
  std::string gold_query;
  std::optional<ResultTable> gold_results;
  Origin origin = Origin::handcrafted;

  bool operator==(const QAExample&) const = default;
};

struct DatasetSplit {
  std::vector<QAExample> train;
  std::vector<QAExample> test;

  bool operator==(const DatasetSplit&) const = default;
};

enum class DatasetFormat { sciqa_json };

// Reads the canonical dataset file:
//   {"train": [record...], "test": [record...]}
//   record = {"id", "question", "paraphrases", "gold_query",
//             "gold_results": {"vars": [...], "rows": [[...]]} | null,
//             "origin": "handcrafted" | "auto_generated"}
// Throws MalformedFile naming the offending key, DuplicateId naming the id.
DatasetSplit load_dataset(const std::filesystem::path& path,
                          DatasetFormat format = DatasetFormat::sciqa_json);

// Same as load_dataset, from in-memory bytes.
DatasetSplit parse_dataset(std::string_view bytes);

// Returns human-readable invariant violations; empty when the record is valid.
std::vector<std::string> validate_example(const QAExample& ex);

// Turns every paraphrase into its own test item with id "<id>#p<k>". Off by
// default in the runner.
std::vector<QAExample> expand_paraphrases(const std::vector<QAExample>& items);

}  // namespace sparqlgen
