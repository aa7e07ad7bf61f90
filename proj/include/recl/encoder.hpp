#pragma once

#include <vector>

#include "recl/nn.hpp"

namespace recl {

/// Token embedding table with mean pooling followed by a two-layer head.
/// Row 0 of the table is the unknown-token slot: it stays at zero, still
/// counts in the pooling denominator, and never accumulates gradient.
class MeanEmbeddingEncoder {
 public:
  MeanEmbeddingEncoder(int vocab_size, int embed_dim, int hidden_dim, int feat_dim);

  void init(RngState& rng);

  /// token_ids must all lie in [0, vocab_size) and every example must have
  /// at least one token. Returns the feature matrix, one row per example.
  DenseMatrix forward(const std::vector<std::vector<int>>& token_ids);

  /// Consumes the cache left by the most recent forward call.
  void backward(const DenseMatrix& grad_feat);

  ParamTensor& embedding() { return embedding_; }
  Mlp2& head() { return head_; }
  int vocab_size() const { return embedding_.rows(); }
  int embed_dim() const { return embedding_.cols(); }
  int feat_dim() const { return head_.out_dim(); }

  void collect_params(std::vector<ParamTensor*>& out);

 private:
  ParamTensor embedding_;
  Mlp2 head_;
  std::vector<std::vector<int>> cached_tokens_;
};

}  // namespace recl
