#include "sparqlgen/cache.hpp"

#include "sparqlgen/errors.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  if (key.size() < 3) throw PreconditionError("cache key too short: " + key);
  return root_ / key.substr(0, 2) / (key + ".json");
}

std::optional<nlohmann::json> ResponseCache::get(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error&) {
    throw IoError("corrupt cache entry " + path.string());
  }
}

void ResponseCache::put(const std::string& key, const nlohmann::json& entry) const {
  write_file_atomic(path_for(key), entry.dump(2) + "\n");
}

}  // namespace sparqlgen
