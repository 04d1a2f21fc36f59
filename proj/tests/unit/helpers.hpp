#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sparqlgen/util.hpp"

namespace sparqlgen::testing {

inline std::filesystem::path fixtures() { return SPARQLGEN_FIXTURES_DIR; }

inline std::string fixture_text(const std::string& rel) { return read_file(fixtures() / rel); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sparqlgen-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace sparqlgen::testing
