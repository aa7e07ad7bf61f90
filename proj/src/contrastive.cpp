#include "recl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace recl {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("contrastive loss: tau must be positive");
}

void add_scaled(DenseMatrix& dst, int row, std::span<const double> src, double scale) {
  for (int j = 0; j < dst.cols(); ++j) dst(row, j) += scale * src[static_cast<std::size_t>(j)];
}

}  // namespace

UclResult ucl_loss(const DenseMatrix& z, const std::vector<std::pair<int, int>>& pairs, double tau) {
  check_tau(tau);
  const int n = z.rows();
  if (n < 2) throw std::invalid_argument("ucl_loss: need at least two rows");
  if (pairs.empty()) throw std::invalid_argument("ucl_loss: no anchor pairs");
  for (const auto& [i, p] : pairs) {
    if (i < 0 || i >= n || p < 0 || p >= n || i == p) {
      throw std::invalid_argument("ucl_loss: invalid pair (" + std::to_string(i) + ", " +
                                  std::to_string(p) + ")");
    }
  }

  UclResult out;
  out.grad_z = DenseMatrix(n, z.cols());
  const double pair_scale = 1.0 / (static_cast<double>(pairs.size()) * static_cast<double>(n));
  std::vector<double> dots(static_cast<std::size_t>(n));
  for (const auto& [i, p] : pairs) {
    double max_d = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      dots[static_cast<std::size_t>(k)] = dot(z.row(i), z.row(k)) / tau;
      max_d = std::max(max_d, dots[static_cast<std::size_t>(k)]);
    }
    double zsum = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      zsum += std::exp(dots[static_cast<std::size_t>(k)] - max_d);
    }
    const double log_den = max_d + std::log(zsum);
    out.loss += pair_scale * (log_den - dots[static_cast<std::size_t>(p)]);

    const double coeff_scale = pair_scale / tau;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      const double prob = std::exp(dots[static_cast<std::size_t>(k)] - max_d) / zsum;
      const double coeff = coeff_scale * (prob - (k == p ? 1.0 : 0.0));
      add_scaled(out.grad_z, k, z.row(i), coeff);
      add_scaled(out.grad_z, i, z.row(k), coeff);
    }
  }
  if (!std::isfinite(out.loss)) throw std::runtime_error("ucl_loss: non-finite loss");
  return out;
}

SclResult scl_loss(const DenseMatrix& z, const std::vector<int>& labels, double tau) {
  check_tau(tau);
  const int n = z.rows();
  if (n < 2) throw std::invalid_argument("scl_loss: need at least two rows");
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("scl_loss: label count mismatch");
  }

  SclResult out;
  out.grad_z = DenseMatrix(n, z.cols());
  std::vector<int> class_size;
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0) throw std::invalid_argument("scl_loss: negative label");
    if (y >= static_cast<int>(class_size.size())) class_size.resize(static_cast<std::size_t>(y) + 1, 0);
    class_size[static_cast<std::size_t>(y)]++;
  }
  for (int i = 0; i < n; ++i) {
    if (class_size[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] >= 2) {
      out.anchors_used++;
    } else {
      out.anchors_skipped++;
    }
  }
  if (out.anchors_used == 0) throw std::runtime_error("scl_loss: every anchor was skipped");

  std::vector<double> dots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const int n_pos = class_size[static_cast<std::size_t>(y)] - 1;
    if (n_pos == 0) continue;
    double max_d = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      dots[static_cast<std::size_t>(k)] = dot(z.row(i), z.row(k)) / tau;
      max_d = std::max(max_d, dots[static_cast<std::size_t>(k)]);
    }
    double zsum = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      zsum += std::exp(dots[static_cast<std::size_t>(k)] - max_d);
    }
    const double log_den = max_d + std::log(zsum);

    const double anchor_scale = 1.0 / (static_cast<double>(n_pos) * out.anchors_used);
    double pos_sum = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i || labels[static_cast<std::size_t>(k)] != y) continue;
      pos_sum += dots[static_cast<std::size_t>(k)];
    }
    out.loss += anchor_scale * (static_cast<double>(n_pos) * log_den - pos_sum);

    const double coeff_scale = anchor_scale / tau;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      const double prob = std::exp(dots[static_cast<std::size_t>(k)] - max_d) / zsum;
      const bool is_pos = labels[static_cast<std::size_t>(k)] == y;
      const double coeff = coeff_scale * (static_cast<double>(n_pos) * prob - (is_pos ? 1.0 : 0.0));
      add_scaled(out.grad_z, k, z.row(i), coeff);
      add_scaled(out.grad_z, i, z.row(k), coeff);
    }
  }
  if (!std::isfinite(out.loss)) throw std::runtime_error("scl_loss: non-finite loss");
  return out;
}

RebalancedClResult rebalanced_cl_loss(const ExtendedBatch& dhat, const RebalancedSets& rebal,
                                      const std::vector<double>& delta, double tau,
                                      AnchorWeight weight) {
  check_tau(tau);
  const int n = dhat.size();
  const int dim = dhat.embeddings.cols();
  if (n < 2) throw std::invalid_argument("rebalanced_cl_loss: need at least two rows");
  if (static_cast<int>(rebal.per_class.size()) != dhat.num_classes) {
    throw std::invalid_argument("rebalanced_cl_loss: per-class set count mismatch");
  }
  if (weight == AnchorWeight::NegLogPrior &&
      static_cast<int>(delta.size()) != dhat.num_classes) {
    throw std::invalid_argument("rebalanced_cl_loss: delta length mismatch");
  }

  RebalancedClResult out;
  out.grad_dhat = DenseMatrix(n, dim);
  out.grad_pos.reserve(rebal.per_class.size());
  out.grad_neg.reserve(rebal.per_class.size());
  for (const auto& cls : rebal.per_class) {
    out.grad_pos.emplace_back(cls.pos.rows(), dim);
    out.grad_neg.emplace_back(cls.neg.rows(), dim);
  }

  const double inv_dhat = 1.0 / static_cast<double>(n);
  // Target bookkeeping per anchor: dhat rows first, then the anchor class's
  // rebalanced positives, then its rebalanced negatives.
  std::vector<double> dots;
  std::vector<char> is_pos;
  for (int i = 0; i < n; ++i) {
    const int y = dhat.labels[static_cast<std::size_t>(i)];
    const auto& cls = rebal.per_class[static_cast<std::size_t>(y)];
    const int n_targets = (n - 1) + cls.pos.rows() + cls.neg.rows();
    dots.assign(static_cast<std::size_t>(n_targets), 0.0);
    is_pos.assign(static_cast<std::size_t>(n_targets), 0);

    const auto anchor = dhat.embeddings.row(i);
    int t = 0;
    int n_pos = 0;
    for (int r = 0; r < n; ++r) {
      if (r == i) continue;
      dots[static_cast<std::size_t>(t)] = dot(anchor, dhat.embeddings.row(r)) / tau;
      if (dhat.labels[static_cast<std::size_t>(r)] == y) {
        is_pos[static_cast<std::size_t>(t)] = 1;
        ++n_pos;
      }
      ++t;
    }
    for (int r = 0; r < cls.pos.rows(); ++r) {
      dots[static_cast<std::size_t>(t)] = dot(anchor, cls.pos.row(r)) / tau;
      is_pos[static_cast<std::size_t>(t)] = 1;
      ++n_pos;
      ++t;
    }
    for (int r = 0; r < cls.neg.rows(); ++r) {
      dots[static_cast<std::size_t>(t)] = dot(anchor, cls.neg.row(r)) / tau;
      ++t;
    }

    if (n_pos == 0) {
      out.anchors_skipped++;
      continue;
    }
    out.anchors_used++;

    double max_d = -std::numeric_limits<double>::infinity();
    for (double d : dots) max_d = std::max(max_d, d);
    double zsum = 0.0;
    double pos_sum = 0.0;
    for (int k = 0; k < n_targets; ++k) {
      zsum += std::exp(dots[static_cast<std::size_t>(k)] - max_d);
      if (is_pos[static_cast<std::size_t>(k)]) pos_sum += dots[static_cast<std::size_t>(k)];
    }
    const double log_den = max_d + std::log(zsum);
    const double w_y = weight == AnchorWeight::Uniform ? 1.0 : -delta[static_cast<std::size_t>(y)];
    out.loss += w_y * inv_dhat * (static_cast<double>(n_pos) * log_den - pos_sum);

    const double coeff_scale = w_y * inv_dhat / tau;
    t = 0;
    auto coeff_at = [&](int idx) {
      const double prob = std::exp(dots[static_cast<std::size_t>(idx)] - max_d) / zsum;
      return coeff_scale *
             (static_cast<double>(n_pos) * prob - (is_pos[static_cast<std::size_t>(idx)] ? 1.0 : 0.0));
    };
    for (int r = 0; r < n; ++r) {
      if (r == i) continue;
      const double coeff = coeff_at(t);
      add_scaled(out.grad_dhat, r, anchor, coeff);
      add_scaled(out.grad_dhat, i, dhat.embeddings.row(r), coeff);
      ++t;
    }
    for (int r = 0; r < cls.pos.rows(); ++r) {
      const double coeff = coeff_at(t);
      add_scaled(out.grad_pos[static_cast<std::size_t>(y)], r, anchor, coeff);
      add_scaled(out.grad_dhat, i, cls.pos.row(r), coeff);
      ++t;
    }
    for (int r = 0; r < cls.neg.rows(); ++r) {
      const double coeff = coeff_at(t);
      add_scaled(out.grad_neg[static_cast<std::size_t>(y)], r, anchor, coeff);
      add_scaled(out.grad_dhat, i, cls.neg.row(r), coeff);
      ++t;
    }
  }
  if (!std::isfinite(out.loss)) throw std::runtime_error("rebalanced_cl_loss: non-finite loss");
  return out;
}

double imbalance_ratio(const std::vector<int>& counts) {
  if (counts.empty()) throw std::invalid_argument("imbalance_ratio: no counts");
  int lo = counts[0];
  int hi = counts[0];
  for (int c : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (lo < 1) throw std::invalid_argument("imbalance_ratio: every class must be populated");
  return static_cast<double>(hi) / static_cast<double>(lo);
}

ContrastiveIr contrastive_imbalance_ratio(const std::vector<int>& batch_counts) {
  if (batch_counts.empty()) {
    throw std::invalid_argument("contrastive_imbalance_ratio: no counts");
  }
  int lo = batch_counts[0];
  int hi = batch_counts[0];
  for (int c : batch_counts) {
    if (c < 0) throw std::invalid_argument("contrastive_imbalance_ratio: negative count");
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  ContrastiveIr out;
  out.approx = lo > 0 ? (static_cast<double>(hi) / lo) * (static_cast<double>(hi) / lo)
                      : std::numeric_limits<double>::infinity();
  out.exact_valid = lo >= 2;
  out.exact = out.exact_valid
                  ? (static_cast<double>(hi) * (hi - 1.0)) / (static_cast<double>(lo) * (lo - 1.0))
                  : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace recl
