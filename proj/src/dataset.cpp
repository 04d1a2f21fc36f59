#include "sparqlgen/dataset.hpp"

#include <json.hpp>
#include <unordered_set>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

using nlohmann::json;

const char* to_string(Origin origin) {
  return origin == Origin::handcrafted ? "handcrafted" : "auto_generated";
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw MalformedFile(where + ": missing required key \"" + key + "\"");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw MalformedFile(where + ": key \"" + key + "\" must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_array(const json& v, const std::string& what) {
  if (!v.is_array()) throw MalformedFile(what + " must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& s : v) {
    if (!s.is_string()) throw MalformedFile(what + " must contain only strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

ResultTable parse_results(const json& v, const std::string& where) {
  if (!v.is_object()) throw MalformedFile(where + ": \"gold_results\" must be an object or null");
  ResultTable table;
  table.vars = string_array(require(v, "vars", where + ".gold_results"), where + ".gold_results.vars");
  const json& rows = require(v, "rows", where + ".gold_results");
  if (!rows.is_array()) throw MalformedFile(where + ".gold_results.rows must be an array");
  for (const auto& row : rows) {
    table.rows.push_back(string_array(row, where + ".gold_results.rows[]"));
    if (table.rows.back().size() != table.vars.size()) {
      throw MalformedFile(where + ".gold_results: row width differs from vars");
    }
  }
  return table;
}

QAExample parse_record(const json& rec, const std::string& where) {
  if (!rec.is_object()) throw MalformedFile(where + " must be an object");
  QAExample ex;
  ex.id = require_string(rec, "id", where);
  const std::string named = where + " (id " + ex.id + ")";
  ex.question = require_string(rec, "question", named);
  ex.gold_query = require_string(rec, "gold_query", named);
  if (auto it = rec.find("paraphrases"); it != rec.end() && !it->is_null()) {
    ex.paraphrases = string_array(*it, named + ".paraphrases");
  }
  if (auto it = rec.find("gold_results"); it != rec.end() && !it->is_null()) {
    ex.gold_results = parse_results(*it, named);
  }
  const std::string origin = require_string(rec, "origin", named);
  if (origin == "handcrafted") {
    ex.origin = Origin::handcrafted;
  } else if (origin == "auto_generated") {
    ex.origin = Origin::auto_generated;
  } else {
    throw MalformedFile(named + ": unknown origin \"" + origin + "\"");
  }
  if (auto violations = validate_example(ex); !violations.empty()) {
    throw MalformedFile(named + ": " + violations.front());
  }
  return ex;
}

std::vector<QAExample> parse_split(const json& root, const char* key,
                                   std::unordered_set<std::string>& seen) {
  const json& arr = require(root, key, "dataset");
  if (!arr.is_array()) throw MalformedFile(std::string("dataset: \"") + key + "\" must be an array");
  std::vector<QAExample> out;
  out.reserve(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    auto ex = parse_record(arr[i], std::string(key) + "[" + std::to_string(i) + "]");
    if (!seen.insert(ex.id).second) throw DuplicateId(ex.id);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

DatasetSplit parse_dataset(std::string_view bytes) {
  json root;
  try {
    root = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw MalformedFile(std::string("dataset: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw MalformedFile("dataset: top level must be an object");
  std::unordered_set<std::string> seen;
  DatasetSplit split;
  split.train = parse_split(root, "train", seen);
  split.test = parse_split(root, "test", seen);
  return split;
}

DatasetSplit load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::sciqa_json:
      break;
  }
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError& e) {
    throw MalformedFile(e.what());
  }
  return parse_dataset(bytes);
}

std::vector<std::string> validate_example(const QAExample& ex) {
  std::vector<std::string> violations;
  if (trim(ex.id).empty()) violations.emplace_back("id empty");
  if (trim(ex.question).empty()) violations.emplace_back("question empty");
  if (trim(ex.gold_query).empty()) violations.emplace_back("gold_query empty");
  if (ex.gold_results && !is_well_formed(*ex.gold_results)) {
    violations.emplace_back("gold_results row width differs from vars");
  }
  return violations;
}

std::vector<QAExample> expand_paraphrases(const std::vector<QAExample>& items) {
  std::vector<QAExample> out;
  for (const auto& ex : items) {
    out.push_back(ex);
    for (size_t k = 0; k < ex.paraphrases.size(); ++k) {
      QAExample p = ex;
      p.id = ex.id + "#p" + std::to_string(k + 1);
      p.question = ex.paraphrases[k];
      p.paraphrases.clear();
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace sparqlgen
