#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace brainstorm {

enum class EmbeddingMode { DeterministicLocal, RemoteService };

// Maps text to a fixed-dimension vector. Identical text must map to an
// identical vector for the lifetime of one provider instance.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingMode mode() const = 0;
  // Raw (not necessarily normalized) embedding.
  virtual std::vector<double> embed_one(std::string_view text) const = 0;
};

// Lowercased alphanumeric tokens hashed (FNV-1a) into `dimension` buckets,
// counted, then L2-normalized. Works offline and is fully deterministic.
class HashedTermFrequencyEmbedder final : public EmbeddingProvider {
 public:
  explicit HashedTermFrequencyEmbedder(std::size_t dimension = 256);
  std::size_t dimension() const override { return dimension_; }
  EmbeddingMode mode() const override { return EmbeddingMode::DeterministicLocal; }
  std::vector<double> embed_one(std::string_view text) const override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dimension_;
};

// OpenAI-compatible POST {base_url}/embeddings. Throws
// Error(EmbeddingProviderFailure) on any transport or schema problem.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::string base_url, std::string api_key, std::string model,
                          std::size_t dimension);
  std::size_t dimension() const override { return dimension_; }
  EmbeddingMode mode() const override { return EmbeddingMode::RemoteService; }
  std::vector<double> embed_one(std::string_view text) const override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::string model_;
  std::size_t dimension_;
};

// Row i is the L2-normalized embedding of texts[i]. Throws
// Error(DegenerateInput) for an empty list.
Eigen::MatrixXd embed(std::span<const std::string> texts, const EmbeddingProvider& provider);

// Normalizes in place; a zero vector stays zero.
void l2_normalize(std::vector<double>& v);

}  // namespace brainstorm
