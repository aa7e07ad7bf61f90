#pragma once

#include <span>

#include "recl/matrix.hpp"

namespace recl {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay: the decay term scales the value
/// directly and never enters the moment estimates. Gradients are zeroed
/// after a successful step; a non-finite gradient aborts the step with
/// parameters untouched.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg);

  void step(std::span<ParamTensor* const> params);

  long step_count() const { return step_count_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  long step_count_ = 0;
};

}  // namespace recl
