#include "recl/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace recl {

void init_uniform(ParamTensor& p, RngState& rng, double scale) {
  double* d = p.value.data();
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    d[i] = (2.0 * rng.next_double() - 1.0) * scale;
  }
}

AffineLayer::AffineLayer(int in_dim, int out_dim) : weight_(in_dim, out_dim), bias_(1, out_dim) {}

DenseMatrix AffineLayer::forward(const DenseMatrix& input) {
  input_ = input;
  DenseMatrix out = matmul(input, weight_.value);
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) out(i, j) += bias_.value(0, j);
  }
  return out;
}

DenseMatrix AffineLayer::backward(const DenseMatrix& grad_out) {
  if (grad_out.rows() != input_.rows() || grad_out.cols() != weight_.cols()) {
    throw std::invalid_argument("AffineLayer::backward: gradient shape mismatch");
  }
  axpy(weight_.grad, matmul_at_b(input_, grad_out));
  for (int i = 0; i < grad_out.rows(); ++i) {
    for (int j = 0; j < grad_out.cols(); ++j) bias_.grad(0, j) += grad_out(i, j);
  }
  return matmul_a_bt(grad_out, weight_.value);
}

void AffineLayer::init(RngState& rng) {
  init_uniform(weight_, rng, 1.0 / std::sqrt(static_cast<double>(weight_.rows())));
  bias_.value.set_zero();
}

void AffineLayer::collect_params(std::vector<ParamTensor*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

DenseMatrix ReluLayer::forward(const DenseMatrix& input) {
  input_ = input;
  DenseMatrix out = input;
  double* d = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (d[i] < 0.0) d[i] = 0.0;
  }
  return out;
}

DenseMatrix ReluLayer::backward(const DenseMatrix& grad_out) const {
  if (grad_out.rows() != input_.rows() || grad_out.cols() != input_.cols()) {
    throw std::invalid_argument("ReluLayer::backward: gradient shape mismatch");
  }
  DenseMatrix out = grad_out;
  const double* in = input_.data();
  double* d = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (in[i] <= 0.0) d[i] = 0.0;
  }
  return out;
}

Mlp2::Mlp2(int in_dim, int hidden_dim, int out_dim)
    : fc1_(in_dim, hidden_dim), fc2_(hidden_dim, out_dim) {}

DenseMatrix Mlp2::forward(const DenseMatrix& x) { return fc2_.forward(act_.forward(fc1_.forward(x))); }

DenseMatrix Mlp2::backward(const DenseMatrix& grad_out) {
  return fc1_.backward(act_.backward(fc2_.backward(grad_out)));
}

void Mlp2::init(RngState& rng) {
  fc1_.init(rng);
  fc2_.init(rng);
}

void Mlp2::collect_params(std::vector<ParamTensor*>& out) {
  fc1_.collect_params(out);
  fc2_.collect_params(out);
}

DenseMatrix l2_normalize_rows(const DenseMatrix& x, std::vector<double>* norms) {
  DenseMatrix out = x;
  if (norms) norms->assign(static_cast<std::size_t>(x.rows()), 0.0);
  for (int i = 0; i < x.rows(); ++i) {
    double n = norm2(x.row(i));
    if (n == 0.0) {
      throw std::invalid_argument("l2_normalize_rows: zero-norm row " + std::to_string(i));
    }
    if (norms) (*norms)[static_cast<std::size_t>(i)] = n;
    double inv = 1.0 / n;
    for (int j = 0; j < x.cols(); ++j) out(i, j) *= inv;
  }
  return out;
}

DenseMatrix l2_normalize_backward(const DenseMatrix& grad_out, const DenseMatrix& normalized,
                                  const std::vector<double>& norms) {
  if (grad_out.rows() != normalized.rows() || grad_out.cols() != normalized.cols() ||
      norms.size() != static_cast<std::size_t>(normalized.rows())) {
    throw std::invalid_argument("l2_normalize_backward: shape mismatch");
  }
  DenseMatrix out(grad_out.rows(), grad_out.cols());
  for (int i = 0; i < grad_out.rows(); ++i) {
    double g_dot_u = dot(grad_out.row(i), normalized.row(i));
    double inv = 1.0 / norms[static_cast<std::size_t>(i)];
    for (int j = 0; j < grad_out.cols(); ++j) {
      out(i, j) = (grad_out(i, j) - g_dot_u * normalized(i, j)) * inv;
    }
  }
  return out;
}

}  // namespace recl
