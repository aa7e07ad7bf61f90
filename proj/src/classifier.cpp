#include "recl/classifier.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace recl {

ClassifierBranch::ClassifierBranch(int feat_dim, int num_classes, int hidden_dim, int proj_dim,
                                   bool tie_prototypes)
    : w_(feat_dim, num_classes), proj_h_(feat_dim, hidden_dim, proj_dim) {
  if (num_classes < 2) throw std::invalid_argument("ClassifierBranch: need at least 2 classes");
  if (!tie_prototypes) proto_free_.emplace(num_classes, feat_dim);
}

void ClassifierBranch::init(RngState& rng) {
  init_uniform(w_, rng, 1.0 / std::sqrt(static_cast<double>(w_.rows())));
  proj_h_.init(rng);
  if (proto_free_) {
    init_uniform(*proto_free_, rng, 1.0 / std::sqrt(static_cast<double>(proto_free_->cols())));
  }
}

DenseMatrix ClassifierBranch::logits(const DenseMatrix& feat) {
  cached_feat_ = feat;
  return matmul(feat, w_.value);
}

DenseMatrix ClassifierBranch::logits_backward(const DenseMatrix& grad_logits) {
  if (grad_logits.rows() != cached_feat_.rows() || grad_logits.cols() != w_.cols()) {
    throw std::invalid_argument("ClassifierBranch::logits_backward: gradient shape mismatch");
  }
  axpy(w_.grad, matmul_at_b(cached_feat_, grad_logits));
  return matmul_a_bt(grad_logits, w_.value);
}

DenseMatrix ClassifierBranch::prototypes() {
  const DenseMatrix input = proto_free_ ? proto_free_->value : transpose(w_.value);
  return proj_h_.forward(input);
}

void ClassifierBranch::prototypes_backward(const DenseMatrix& grad_proto) {
  DenseMatrix grad_input = proj_h_.backward(grad_proto);
  if (proto_free_) {
    axpy(proto_free_->grad, grad_input);
  } else {
    axpy(w_.grad, transpose(grad_input));
  }
}

void ClassifierBranch::collect_params(std::vector<ParamTensor*>& out) {
  out.push_back(&w_);
  proj_h_.collect_params(out);
  if (proto_free_) out.push_back(&*proto_free_);
}

std::vector<double> compensation_from_priors(const std::vector<double>& priors) {
  if (priors.empty()) throw std::invalid_argument("compensation_from_priors: empty priors");
  double sum = 0.0;
  for (double p : priors) {
    if (!(p > 0.0)) throw std::invalid_argument("compensation_from_priors: priors must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("compensation_from_priors: priors sum to " + std::to_string(sum));
  }
  std::vector<double> delta(priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i) delta[i] = std::log(priors[i]);
  return delta;
}

ClassificationLoss logit_compensated_loss(const DenseMatrix& logits, const std::vector<int>& labels,
                                          const std::vector<double>& delta) {
  const int n = logits.rows();
  const int C = logits.cols();
  if (n == 0) throw std::invalid_argument("logit_compensated_loss: empty batch");
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("logit_compensated_loss: label count mismatch");
  }
  if (!delta.empty() && static_cast<int>(delta.size()) != C) {
    throw std::invalid_argument("logit_compensated_loss: delta length mismatch");
  }
  if (!logits.all_finite()) throw std::invalid_argument("logit_compensated_loss: non-finite logits");

  ClassificationLoss out;
  out.grad_logits = DenseMatrix(n, C);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> shifted(static_cast<std::size_t>(C));
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= C) {
      throw std::invalid_argument("logit_compensated_loss: label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(C) + ")");
    }
    double max_v = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < C; ++c) {
      double v = logits(i, c) + (delta.empty() ? 0.0 : delta[static_cast<std::size_t>(c)]);
      shifted[static_cast<std::size_t>(c)] = v;
      if (v > max_v) max_v = v;
    }
    double z = 0.0;
    for (int c = 0; c < C; ++c) {
      shifted[static_cast<std::size_t>(c)] = std::exp(shifted[static_cast<std::size_t>(c)] - max_v);
      z += shifted[static_cast<std::size_t>(c)];
    }
    out.loss += (std::log(z) + max_v) -
                (logits(i, y) + (delta.empty() ? 0.0 : delta[static_cast<std::size_t>(y)]));
    for (int c = 0; c < C; ++c) {
      double p = shifted[static_cast<std::size_t>(c)] / z;
      out.grad_logits(i, c) = (p - (c == y ? 1.0 : 0.0)) * inv_n;
    }
  }
  out.loss *= inv_n;
  return out;
}

}  // namespace recl
