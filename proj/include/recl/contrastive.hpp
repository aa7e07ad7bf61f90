#pragma once

#include <utility>
#include <vector>

#include "recl/rebalance.hpp"

namespace recl {

struct UclResult {
  double loss = 0.0;
  DenseMatrix grad_z;
};

/// Unsupervised contrastive loss. For each (anchor, positive) index pair
/// the inner term is -log(exp(z_i.z_p / tau) / sum_{k != i} exp(z_i.z_k / tau)),
/// scaled by 1/|B| with |B| the number of rows; the loss is the mean of
/// those terms over the pairs. The gradient covers every row of z.
UclResult ucl_loss(const DenseMatrix& z, const std::vector<std::pair<int, int>>& pairs, double tau);

struct SclResult {
  double loss = 0.0;
  DenseMatrix grad_z;
  int anchors_used = 0;
  int anchors_skipped = 0;
};

/// Supervised contrastive loss: every row is an anchor, its positives are
/// the same-label rows, each anchor's sum is scaled by 1/(|B_y| - 1), and
/// the total is averaged over anchors. Anchors whose class has no other
/// member are skipped and counted; all anchors skipped is an error.
SclResult scl_loss(const DenseMatrix& z, const std::vector<int>& labels, double tau);

enum class AnchorWeight { NegLogPrior, Uniform };

struct RebalancedClResult {
  double loss = 0.0;
  DenseMatrix grad_dhat;
  std::vector<DenseMatrix> grad_pos;  // per class, matching rebal.per_class[c].pos
  std::vector<DenseMatrix> grad_neg;
  int anchors_used = 0;
  int anchors_skipped = 0;
};

/// Class-rebalanced contrastive loss over the extended batch. Every row of
/// dhat is an anchor; for an anchor of class y the positives are the class-y
/// rebalanced positives plus the other class-y rows of dhat, and the
/// denominator runs over both class-y rebalanced sets plus every other dhat
/// row. Each anchor's sum carries weight w_y / |dhat|, with w_y = -delta_y
/// (NegLogPrior) or 1 (Uniform); the total is the sum over anchors.
/// Gradients are returned for every dhat row and every rebalanced target
/// row. Anchors with no positives are skipped and counted.
RebalancedClResult rebalanced_cl_loss(const ExtendedBatch& dhat, const RebalancedSets& rebal,
                                      const std::vector<double>& delta, double tau,
                                      AnchorWeight weight);

/// max count / min count. Every class must be populated.
double imbalance_ratio(const std::vector<int>& counts);

struct ContrastiveIr {
  double exact = 0.0;   // n_max(n_max - 1) / (n_min(n_min - 1))
  double approx = 0.0;  // (n_max / n_min)^2
  bool exact_valid = false;
};

/// Ratio of same-class ordered-pair counts between the largest and smallest
/// class in a batch. The exact form needs every count >= 2; below that only
/// the approximation is returned and the result is flagged.
ContrastiveIr contrastive_imbalance_ratio(const std::vector<int>& batch_counts);

}  // namespace recl
