#include "recl/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace recl {

double finite_diff_check(const ScalarFn& loss_fn, std::span<double> point,
                         std::span<const double> analytic_grad, double h) {
  if (point.size() != analytic_grad.size()) {
    throw std::invalid_argument("finite_diff_check: gradient length mismatch");
  }
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = loss_fn(point);
    point[i] = saved - h;
    const double down = loss_fn(point);
    point[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double err = std::abs(analytic_grad[i] - fd) / std::max(1.0, std::abs(fd));
    if (err > worst) worst = err;
  }
  return worst;
}

}  // namespace recl
