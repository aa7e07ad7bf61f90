#include "recl/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace recl {

MeanEmbeddingEncoder::MeanEmbeddingEncoder(int vocab_size, int embed_dim, int hidden_dim,
                                           int feat_dim)
    : embedding_(vocab_size, embed_dim), head_(embed_dim, hidden_dim, feat_dim) {
  if (vocab_size < 1) throw std::invalid_argument("MeanEmbeddingEncoder: vocab_size must be >= 1");
}

void MeanEmbeddingEncoder::init(RngState& rng) {
  init_uniform(embedding_, rng, 1.0 / std::sqrt(static_cast<double>(embedding_.cols())));
  for (int j = 0; j < embedding_.cols(); ++j) embedding_.value(0, j) = 0.0;
  head_.init(rng);
}

DenseMatrix MeanEmbeddingEncoder::forward(const std::vector<std::vector<int>>& token_ids) {
  const int n = static_cast<int>(token_ids.size());
  DenseMatrix pooled(n, embedding_.cols());
  for (int i = 0; i < n; ++i) {
    const auto& ids = token_ids[static_cast<std::size_t>(i)];
    if (ids.empty()) {
      throw std::invalid_argument("MeanEmbeddingEncoder: example " + std::to_string(i) +
                                  " has no tokens");
    }
    for (int id : ids) {
      if (id < 0 || id >= embedding_.rows()) {
        throw std::invalid_argument("MeanEmbeddingEncoder: token id " + std::to_string(id) +
                                    " outside vocabulary of size " +
                                    std::to_string(embedding_.rows()));
      }
      if (id == 0) continue;  // unknown token contributes a zero vector
      for (int j = 0; j < embedding_.cols(); ++j) pooled(i, j) += embedding_.value(id, j);
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (int j = 0; j < embedding_.cols(); ++j) pooled(i, j) *= inv;
  }
  cached_tokens_ = token_ids;
  return head_.forward(pooled);
}

void MeanEmbeddingEncoder::backward(const DenseMatrix& grad_feat) {
  if (grad_feat.rows() != static_cast<int>(cached_tokens_.size())) {
    throw std::invalid_argument("MeanEmbeddingEncoder::backward: gradient row mismatch");
  }
  DenseMatrix grad_pooled = head_.backward(grad_feat);
  for (int i = 0; i < grad_pooled.rows(); ++i) {
    const auto& ids = cached_tokens_[static_cast<std::size_t>(i)];
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (int id : ids) {
      if (id == 0) continue;
      for (int j = 0; j < grad_pooled.cols(); ++j) {
        embedding_.grad(id, j) += grad_pooled(i, j) * inv;
      }
    }
  }
}

void MeanEmbeddingEncoder::collect_params(std::vector<ParamTensor*>& out) {
  out.push_back(&embedding_);
  head_.collect_params(out);
}

}  // namespace recl
