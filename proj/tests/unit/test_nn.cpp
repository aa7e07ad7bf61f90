#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "recl/gradcheck.hpp"
#include "recl/matrix.hpp"
#include "recl/nn.hpp"
#include "recl/rng.hpp"

using namespace recl;

namespace {

DenseMatrix random_matrix(int r, int c, RngState& rng) {
  DenseMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.next_double() * 2.0 - 1.0;
  return m;
}

// Linear readout sum(c .* y): its gradient with respect to y is c, which
// makes every layer's parameter gradient finite-difference checkable.
double readout(const DenseMatrix& y, const DenseMatrix& c) {
  double s = 0.0;
  for (int i = 0; i < y.rows(); ++i)
    for (int j = 0; j < y.cols(); ++j) s += y(i, j) * c(i, j);
  return s;
}

std::span<double> as_span(DenseMatrix& m) { return {m.data(), m.size()}; }
std::span<const double> as_cspan(const DenseMatrix& m) { return {m.data(), m.size()}; }

}  // namespace

TEST_CASE("affine forward computes x W + b") {
  AffineLayer layer(2, 2);
  layer.weight().value(0, 0) = 1.0;
  layer.weight().value(0, 1) = 2.0;
  layer.weight().value(1, 0) = 3.0;
  layer.weight().value(1, 1) = 4.0;
  layer.bias().value(0, 0) = 0.5;
  layer.bias().value(0, 1) = -0.5;
  DenseMatrix x(1, 2);
  x(0, 0) = 10.0;
  x(0, 1) = 20.0;
  DenseMatrix y = layer.forward(x);
  CHECK(y(0, 0) == doctest::Approx(10 * 1 + 20 * 3 + 0.5));
  CHECK(y(0, 1) == doctest::Approx(10 * 2 + 20 * 4 - 0.5));
}

TEST_CASE("affine gradients match finite differences") {
  RngState rng(101);
  AffineLayer layer(3, 2);
  layer.init(rng);
  DenseMatrix x = random_matrix(4, 3, rng);
  DenseMatrix c = random_matrix(4, 2, rng);

  DenseMatrix y = layer.forward(x);
  DenseMatrix grad_in = layer.backward(c);

  SUBCASE("weight gradient") {
    auto fn = [&](std::span<const double>) { return readout(layer.forward(x), c); };
    CHECK(finite_diff_check(fn, as_span(layer.weight().value), as_cspan(layer.weight().grad)) <
          1e-6);
  }
  SUBCASE("bias gradient") {
    auto fn = [&](std::span<const double>) { return readout(layer.forward(x), c); };
    CHECK(finite_diff_check(fn, as_span(layer.bias().value), as_cspan(layer.bias().grad)) < 1e-6);
  }
  SUBCASE("input gradient") {
    auto fn = [&](std::span<const double>) { return readout(layer.forward(x), c); };
    CHECK(finite_diff_check(fn, as_span(x), as_cspan(grad_in)) < 1e-6);
  }
}

TEST_CASE("affine backward accumulates across calls") {
  RngState rng(102);
  AffineLayer layer(2, 2);
  layer.init(rng);
  DenseMatrix x = random_matrix(3, 2, rng);
  DenseMatrix c = random_matrix(3, 2, rng);
  layer.forward(x);
  layer.backward(c);
  DenseMatrix once = layer.weight().grad;
  layer.forward(x);
  layer.backward(c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(layer.weight().grad(i, j) == doctest::Approx(2.0 * once(i, j)));
}

TEST_CASE("relu clamps negatives and uses subgradient zero at zero") {
  ReluLayer relu;
  DenseMatrix x(1, 3);
  x(0, 0) = -2.0;
  x(0, 1) = 0.0;
  x(0, 2) = 3.0;
  DenseMatrix y = relu.forward(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == 3.0);
  DenseMatrix g(1, 3, 1.0);
  DenseMatrix gin = relu.backward(g);
  CHECK(gin(0, 0) == 0.0);
  CHECK(gin(0, 1) == 0.0);  // exactly zero input gets zero gradient
  CHECK(gin(0, 2) == 1.0);
}

TEST_CASE("two-layer perceptron gradients match finite differences") {
  RngState rng(103);
  Mlp2 mlp(3, 5, 2);
  mlp.init(rng);
  DenseMatrix x = random_matrix(4, 3, rng);
  DenseMatrix c = random_matrix(4, 2, rng);

  mlp.forward(x);
  std::vector<ParamTensor*> params;
  mlp.collect_params(params);
  REQUIRE(params.size() == 4);
  for (ParamTensor* p : params) p->zero_grad();
  mlp.forward(x);
  DenseMatrix grad_in = mlp.backward(c);

  auto fn = [&](std::span<const double>) { return readout(mlp.forward(x), c); };
  for (ParamTensor* p : params) {
    CHECK(finite_diff_check(fn, as_span(p->value), as_cspan(p->grad)) < 1e-6);
  }
  CHECK(finite_diff_check(fn, as_span(x), as_cspan(grad_in)) < 1e-6);
}

TEST_CASE("l2 normalization produces unit rows and is idempotent") {
  RngState rng(104);
  DenseMatrix x = random_matrix(5, 4, rng);
  std::vector<double> norms;
  DenseMatrix u = l2_normalize_rows(x, &norms);
  REQUIRE(norms.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(norm2(u.row(i)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norms[i] == doctest::Approx(norm2(x.row(i))));
  }
  DenseMatrix uu = l2_normalize_rows(u);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) CHECK(uu(i, j) == doctest::Approx(u(i, j)).epsilon(1e-12));
}

TEST_CASE("l2 normalization rejects zero rows") {
  DenseMatrix x(2, 3);
  x(0, 0) = 1.0;
  CHECK_THROWS_AS(l2_normalize_rows(x), std::invalid_argument);
}

TEST_CASE("l2 normalization backward matches finite differences") {
  RngState rng(105);
  DenseMatrix x = random_matrix(4, 3, rng);
  DenseMatrix c = random_matrix(4, 3, rng);

  std::vector<double> norms;
  DenseMatrix u = l2_normalize_rows(x, &norms);
  DenseMatrix grad_in = l2_normalize_backward(c, u, norms);

  auto fn = [&](std::span<const double>) { return readout(l2_normalize_rows(x), c); };
  CHECK(finite_diff_check(fn, as_span(x), as_cspan(grad_in)) < 1e-6);
}

TEST_CASE("uniform init respects bounds and is deterministic") {
  ParamTensor p(8, 8);
  RngState rng(106);
  init_uniform(p, rng, 0.25);
  bool nonzero = false;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(std::abs(p.value(i, j)) <= 0.25);
      nonzero = nonzero || p.value(i, j) != 0.0;
    }
  CHECK(nonzero);

  ParamTensor q(8, 8);
  RngState rng2(106);
  init_uniform(q, rng2, 0.25);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) CHECK(p.value(i, j) == q.value(i, j));
}
