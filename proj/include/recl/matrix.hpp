#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace recl {

/// Row-major dense matrix of doubles. The only storage type in the library;
/// all shapes are validated at operation boundaries.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> row(int r) {
    return {values_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {values_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  void set_zero();
  void fill(double v);
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

/// Parameter with gradient and first/second optimizer moments, all matching
/// the value's shape. Gradients accumulate across a step and are zeroed by
/// the optimizer after each update.
struct ParamTensor {
  DenseMatrix value;
  DenseMatrix grad;
  DenseMatrix moment1;
  DenseMatrix moment2;

  ParamTensor(int rows, int cols)
      : value(rows, cols), grad(rows, cols), moment1(rows, cols), moment2(rows, cols) {}

  int rows() const { return value.rows(); }
  int cols() const { return value.cols(); }
  void zero_grad() { grad.set_zero(); }
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// transpose(a) * b without materializing the transpose.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);

/// a * transpose(b) without materializing the transpose.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom);

/// dst += scale * src; shapes must match.
void axpy(DenseMatrix& dst, const DenseMatrix& src, double scale = 1.0);

void scale_in_place(DenseMatrix& m, double scale);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace recl
