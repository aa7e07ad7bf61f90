#pragma once

#include <vector>

#include "recl/matrix.hpp"
#include "recl/rng.hpp"

namespace recl {

/// Fills value with uniform draws in (-scale, scale), row-major order.
void init_uniform(ParamTensor& p, RngState& rng, double scale);

/// y = x * W + b. forward caches x; backward accumulates parameter
/// gradients and returns the gradient with respect to x.
class AffineLayer {
 public:
  AffineLayer(int in_dim, int out_dim);

  DenseMatrix forward(const DenseMatrix& input);
  DenseMatrix backward(const DenseMatrix& grad_out);

  void init(RngState& rng);
  void collect_params(std::vector<ParamTensor*>& out);

  ParamTensor& weight() { return weight_; }
  ParamTensor& bias() { return bias_; }
  int in_dim() const { return weight_.rows(); }
  int out_dim() const { return weight_.cols(); }

 private:
  ParamTensor weight_;  // in_dim x out_dim
  ParamTensor bias_;    // 1 x out_dim
  DenseMatrix input_;
};

/// Elementwise max(x, 0); the subgradient at exactly 0 is 0.
class ReluLayer {
 public:
  DenseMatrix forward(const DenseMatrix& input);
  DenseMatrix backward(const DenseMatrix& grad_out) const;

 private:
  DenseMatrix input_;
};

/// affine -> relu -> affine.
class Mlp2 {
 public:
  Mlp2(int in_dim, int hidden_dim, int out_dim);

  DenseMatrix forward(const DenseMatrix& x);
  DenseMatrix backward(const DenseMatrix& grad_out);

  void init(RngState& rng);
  void collect_params(std::vector<ParamTensor*>& out);

  AffineLayer& fc1() { return fc1_; }
  AffineLayer& fc2() { return fc2_; }
  int in_dim() const { return fc1_.in_dim(); }
  int out_dim() const { return fc2_.out_dim(); }

 private:
  AffineLayer fc1_;
  ReluLayer act_;
  AffineLayer fc2_;
};

/// Row-wise x / ||x||. Rows with zero norm are an error. norms, when given,
/// receives the input row norms needed by the backward pass.
DenseMatrix l2_normalize_rows(const DenseMatrix& x, std::vector<double>* norms = nullptr);

/// Gradient of l2_normalize_rows: g_in = (g - (g . u) u) / ||x|| per row,
/// where u is the normalized row.
DenseMatrix l2_normalize_backward(const DenseMatrix& grad_out, const DenseMatrix& normalized,
                                  const std::vector<double>& norms);

}  // namespace recl
