#include "brainstorm/embedding.hpp"

#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "brainstorm/error.hpp"
#include "brainstorm/http_client.hpp"
#include "brainstorm/ids.hpp"

namespace brainstorm {

void l2_normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

HashedTermFrequencyEmbedder::HashedTermFrequencyEmbedder(std::size_t dimension)
    : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<std::string> HashedTermFrequencyEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<double> HashedTermFrequencyEmbedder::embed_one(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  auto tokens = tokenize(text);
  // Token-free text still gets a unit vector so rows stay normalizable.
  if (tokens.empty()) tokens.emplace_back();
  for (const auto& tok : tokens) v[fnv1a64(tok) % dimension_] += 1.0;
  l2_normalize(v);
  return v;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string base_url, std::string api_key,
                                                 std::string model, std::size_t dimension)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      dimension_(dimension) {}

std::vector<double> RemoteEmbeddingProvider::embed_one(std::string_view text) const {
  net::HttpRequest req;
  req.url = base_url_ + "/embeddings";
  if (!api_key_.empty()) req.headers["Authorization"] = "Bearer " + api_key_;
  req.body = nlohmann::json{{"model", model_}, {"input", std::string(text)}}.dump();
  try {
    const auto resp = net::send(req);
    if (resp.status < 200 || resp.status >= 300) {
      throw Error(ErrorCode::EmbeddingProviderFailure,
                  "embedding request returned HTTP " + std::to_string(resp.status),
                  {{"status", resp.status}, {"body", resp.body}});
    }
    auto vec = nlohmann::json::parse(resp.body)
                   .at("data")
                   .at(0)
                   .at("embedding")
                   .get<std::vector<double>>();
    if (vec.size() != dimension_) {
      throw Error(ErrorCode::EmbeddingProviderFailure,
                  "embedding dimension " + std::to_string(vec.size()) + ", expected " +
                      std::to_string(dimension_));
    }
    return vec;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmbeddingProviderFailure) throw;
    throw Error(ErrorCode::EmbeddingProviderFailure, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::EmbeddingProviderFailure,
                std::string("malformed embedding response: ") + e.what());
  }
}

Eigen::MatrixXd embed(std::span<const std::string> texts, const EmbeddingProvider& provider) {
  if (texts.empty()) throw Error(ErrorCode::DegenerateInput, "nothing to embed");
  const auto dim = static_cast<Eigen::Index>(provider.dimension());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto v = provider.embed_one(texts[i]);
    if (v.size() != provider.dimension()) {
      throw Error(ErrorCode::EmbeddingProviderFailure, "provider returned wrong dimension");
    }
    l2_normalize(v);
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), dim);
  }
  return out;
}

}  // namespace brainstorm
