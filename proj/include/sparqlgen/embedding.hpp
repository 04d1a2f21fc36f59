#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "sparqlgen/errors.hpp"

namespace sparqlgen {

using EmbeddingVector = Eigen::VectorXd;

// dot(a, b) / (|a| |b|), clamped to [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine_similarity: lengths " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()));
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) throw ZeroVector("cosine_similarity: zero vector");
  const Scalar sim = a.dot(b) / (na * nb);
  return std::clamp(sim, Scalar(-1), Scalar(1));
}

// Same as cosine_similarity but yields 0 when either side is the zero vector.
// Used for ranking, where an empty label simply ranks last.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar ranking_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) return cosine_similarity(a, b);
  if (a.squaredNorm() == Scalar(0) || b.squaredNorm() == Scalar(0)) return Scalar(0);
  return cosine_similarity(a, b);
}

// Maps a batch of texts to vectors of one common length. Vectors are only
// comparable within the batch they were produced in.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
  virtual std::string name() const = 0;
};

// Offline provider: each text becomes the count vector of its lowercase
// alphanumeric tokens over the vocabulary of the batch.
class LexicalEmbedder final : public EmbeddingProvider {
 public:
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  std::string name() const override { return "lexical"; }

  static std::vector<std::string> tokens(std::string_view text);
};

}  // namespace sparqlgen
