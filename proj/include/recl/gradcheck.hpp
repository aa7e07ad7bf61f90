#pragma once

#include <functional>
#include <span>

namespace recl {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient check. Perturbs each coordinate of point in
/// place (restoring it afterwards), evaluates loss_fn at +/- h, and returns
/// max_i |analytic_i - fd_i| / max(1, |fd_i|).
double finite_diff_check(const ScalarFn& loss_fn, std::span<double> point,
                         std::span<const double> analytic_grad, double h = 1e-5);

}  // namespace recl
