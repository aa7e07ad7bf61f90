#include "recl/metrics.hpp"

#include <stdexcept>
#include <string>

namespace recl {

MetricsReport compute_metrics(const std::vector<int>& labels, const std::vector<int>& predictions,
                              int num_classes) {
  if (labels.empty()) throw std::invalid_argument("compute_metrics: empty label list");
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("compute_metrics: prediction count mismatch");
  }
  if (num_classes < 1) throw std::invalid_argument("compute_metrics: num_classes must be >= 1");

  MetricsReport out;
  out.num_examples = static_cast<long>(labels.size());
  out.confusion.assign(static_cast<std::size_t>(num_classes),
                       std::vector<long>(static_cast<std::size_t>(num_classes), 0));
  long correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 0 || y >= num_classes || p < 0 || p >= num_classes) {
      throw std::invalid_argument("compute_metrics: class index out of range at example " +
                                  std::to_string(i));
    }
    out.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)]++;
    if (y == p) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());

  out.precision.assign(static_cast<std::size_t>(num_classes), 0.0);
  out.recall.assign(static_cast<std::size_t>(num_classes), 0.0);
  out.f1.assign(static_cast<std::size_t>(num_classes), 0.0);
  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    long tp = out.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    long pred_c = 0;
    long true_c = 0;
    for (int o = 0; o < num_classes; ++o) {
      pred_c += out.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
      true_c += out.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
    }
    const double prec = pred_c > 0 ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    const double rec = true_c > 0 ? static_cast<double>(tp) / static_cast<double>(true_c) : 0.0;
    const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    out.precision[static_cast<std::size_t>(c)] = prec;
    out.recall[static_cast<std::size_t>(c)] = rec;
    out.f1[static_cast<std::size_t>(c)] = f1;
    f1_sum += f1;
  }
  out.macro_f1 = f1_sum / static_cast<double>(num_classes);
  return out;
}

}  // namespace recl
