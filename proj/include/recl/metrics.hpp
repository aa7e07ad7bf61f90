#pragma once

#include <vector>

namespace recl {

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::vector<long>> confusion;  // confusion[true][pred]
  long num_examples = 0;
};

/// Per-class precision/recall/F1 and macro-F1 from prediction pairs. Any
/// zero denominator (no predictions, no members, or both scores zero)
/// yields 0 for the affected score.
MetricsReport compute_metrics(const std::vector<int>& labels, const std::vector<int>& predictions,
                              int num_classes);

}  // namespace recl
