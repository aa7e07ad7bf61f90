#pragma once

#include <optional>
#include <vector>

#include "recl/nn.hpp"

namespace recl {

/// Linear classifier head plus the prototype projector. The class weight
/// matrix w (feat_dim x C, no bias) doubles as the prototype source: the
/// raw prototype of class c is proj_h applied to column c of w, so the
/// contrastive branch pushes gradient into w through proj_h. Constructing
/// with tie_prototypes = false swaps in an independent C x feat_dim
/// parameter as the projector input, severing that shared path.
class ClassifierBranch {
 public:
  ClassifierBranch(int feat_dim, int num_classes, int hidden_dim, int proj_dim,
                   bool tie_prototypes = true);

  void init(RngState& rng);

  /// logits = feat * w; caches feat for the gradient pass.
  DenseMatrix logits(const DenseMatrix& feat);

  /// Accumulates w.grad and returns the gradient with respect to feat.
  DenseMatrix logits_backward(const DenseMatrix& grad_logits);

  /// Raw (unnormalized) prototypes, one row per class.
  DenseMatrix prototypes();

  /// Routes grad through proj_h into w (tied) or the free parameter.
  void prototypes_backward(const DenseMatrix& grad_proto);

  ParamTensor& weight() { return w_; }
  Mlp2& proj_h() { return proj_h_; }
  bool tied() const { return !proto_free_.has_value(); }
  ParamTensor* detached_prototypes() { return proto_free_ ? &*proto_free_ : nullptr; }
  int num_classes() const { return w_.cols(); }
  int feat_dim() const { return w_.rows(); }

  void collect_params(std::vector<ParamTensor*>& out);

 private:
  ParamTensor w_;  // feat_dim x C
  Mlp2 proj_h_;    // feat_dim -> hidden -> proj_dim
  std::optional<ParamTensor> proto_free_;
  DenseMatrix cached_feat_;
};

/// delta_y = log P_y. Priors must be strictly positive and sum to 1 within
/// 1e-9.
std::vector<double> compensation_from_priors(const std::vector<double>& priors);

struct ClassificationLoss {
  double loss = 0.0;
  DenseMatrix grad_logits;
};

/// Mean cross-entropy of softmax(logits + delta) against the labels, with
/// the gradient taken with respect to the raw logits. An empty delta means
/// no compensation. Row-wise max subtraction keeps the softmax finite.
ClassificationLoss logit_compensated_loss(const DenseMatrix& logits, const std::vector<int>& labels,
                                          const std::vector<double>& delta);

}  // namespace recl
