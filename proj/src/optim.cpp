#include "recl/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace recl {

AdamW::AdamW(AdamWConfig cfg) : cfg_(cfg) {
  if (!(cfg.lr >= 0.0) || !(cfg.weight_decay >= 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) || !(cfg.eps > 0.0)) {
    throw std::invalid_argument("AdamW: invalid configuration");
  }
}

void AdamW::step(std::span<ParamTensor* const> params) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p]->grad.all_finite()) {
      throw std::runtime_error("AdamW::step: non-finite gradient in parameter " +
                               std::to_string(p) + "; step aborted");
    }
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (ParamTensor* p : params) {
    double* v = p->value.data();
    double* g = p->grad.data();
    double* m1 = p->moment1.data();
    double* m2 = p->moment2.data();
    const std::size_t n = p->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      v[i] -= cfg_.lr * cfg_.weight_decay * v[i];
      m1[i] = cfg_.beta1 * m1[i] + (1.0 - cfg_.beta1) * g[i];
      m2[i] = cfg_.beta2 * m2[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mhat = m1[i] / bc1;
      double vhat = m2[i] / bc2;
      v[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p->zero_grad();
  }
}

}  // namespace recl
