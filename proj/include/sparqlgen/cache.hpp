#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

namespace sparqlgen {

// Content-addressed store: one JSON file per key at {root}/{key[0:2]}/{key}.json.
// Writes are atomic (temp file + rename); safe for concurrent use.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& entry) const;

  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace sparqlgen
