#include "sparqlgen/embedding.hpp"

#include <cctype>
#include <unordered_map>

namespace sparqlgen {

std::vector<std::string> LexicalEmbedder::tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<EmbeddingVector> LexicalEmbedder::embed(std::span<const std::string> texts) {
  std::unordered_map<std::string, Eigen::Index> vocab;
  std::vector<std::vector<Eigen::Index>> ids(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    for (auto& tok : tokens(texts[i])) {
      auto [it, inserted] = vocab.try_emplace(std::move(tok), static_cast<Eigen::Index>(vocab.size()));
      ids[i].push_back(it->second);
    }
  }
  const auto dim = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(vocab.size()));
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& row : ids) {
    EmbeddingVector v = EmbeddingVector::Zero(dim);
    for (auto id : row) v[id] += 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace sparqlgen
