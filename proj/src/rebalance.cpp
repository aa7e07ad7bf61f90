#include "recl/rebalance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace recl {

namespace {

constexpr double kDegenerateMixNorm = 1e-12;

void copy_row(DenseMatrix& dst, int dst_row, std::span<const double> src) {
  for (int j = 0; j < dst.cols(); ++j) dst(dst_row, j) = src[static_cast<std::size_t>(j)];
}

}  // namespace

ExtendedBatch extend_with_prototypes(const DenseMatrix& z, const std::vector<int>& labels,
                                     const DenseMatrix& proto_raw) {
  const int C = proto_raw.rows();
  if (C < 1) throw std::invalid_argument("extend_with_prototypes: need at least one prototype");
  if (static_cast<int>(labels.size()) != z.rows()) {
    throw std::invalid_argument("extend_with_prototypes: label count mismatch");
  }
  if (z.rows() > 0 && z.cols() != proto_raw.cols()) {
    throw std::invalid_argument("extend_with_prototypes: embedding width mismatch");
  }
  for (int lbl : labels) {
    if (lbl < 0 || lbl >= C) {
      throw std::invalid_argument("extend_with_prototypes: label " + std::to_string(lbl) +
                                  " outside [0, " + std::to_string(C) + ")");
    }
  }

  ExtendedBatch out;
  out.num_classes = C;
  DenseMatrix stacked = z.rows() > 0 ? vstack(z, proto_raw) : proto_raw;
  out.embeddings = l2_normalize_rows(stacked, &out.source_norms);
  out.labels = labels;
  out.is_prototype.assign(static_cast<std::size_t>(out.embeddings.rows()), 0);
  for (int c = 0; c < C; ++c) {
    out.labels.push_back(c);
    out.is_prototype[static_cast<std::size_t>(z.rows() + c)] = 1;
  }
  return out;
}

DenseMatrix extend_backward(const ExtendedBatch& dhat, const DenseMatrix& grad_rows) {
  return l2_normalize_backward(grad_rows, dhat.embeddings, dhat.source_norms);
}

DenseMatrix materialize_rows(const DenseMatrix& dhat_rows, const std::vector<RowProvenance>& prov) {
  DenseMatrix out(static_cast<int>(prov.size()), dhat_rows.cols());
  for (std::size_t s = 0; s < prov.size(); ++s) {
    const RowProvenance& p = prov[s];
    if (p.kind == RowProvenance::Kind::Sampled) {
      copy_row(out, static_cast<int>(s), dhat_rows.row(p.src_i));
    } else {
      const auto u = dhat_rows.row(p.src_i);
      const auto v = dhat_rows.row(p.src_j);
      double norm_sq = 0.0;
      for (int j = 0; j < dhat_rows.cols(); ++j) {
        double pre = p.alpha * u[static_cast<std::size_t>(j)] +
                     (1.0 - p.alpha) * v[static_cast<std::size_t>(j)];
        out(static_cast<int>(s), j) = pre;
        norm_sq += pre * pre;
      }
      const double norm = std::sqrt(norm_sq);
      if (norm == 0.0) {
        throw std::runtime_error("materialize_rows: degenerate mixture has zero norm");
      }
      const double inv = 1.0 / norm;
      for (int j = 0; j < dhat_rows.cols(); ++j) out(static_cast<int>(s), j) *= inv;
    }
  }
  return out;
}

void materialize_backward(const DenseMatrix& dhat_rows, const std::vector<RowProvenance>& prov,
                          const DenseMatrix& grad_rows, DenseMatrix& grad_dhat) {
  if (grad_rows.rows() != static_cast<int>(prov.size()) || grad_rows.cols() != dhat_rows.cols() ||
      grad_dhat.rows() != dhat_rows.rows() || grad_dhat.cols() != dhat_rows.cols()) {
    throw std::invalid_argument("materialize_backward: shape mismatch");
  }
  const int dim = dhat_rows.cols();
  std::vector<double> pre(static_cast<std::size_t>(dim));
  for (std::size_t s = 0; s < prov.size(); ++s) {
    const RowProvenance& p = prov[s];
    const auto g = grad_rows.row(static_cast<int>(s));
    if (p.kind == RowProvenance::Kind::Sampled) {
      for (int j = 0; j < dim; ++j) grad_dhat(p.src_i, j) += g[static_cast<std::size_t>(j)];
      continue;
    }
    const auto u = dhat_rows.row(p.src_i);
    const auto v = dhat_rows.row(p.src_j);
    double norm_sq = 0.0;
    for (int j = 0; j < dim; ++j) {
      pre[static_cast<std::size_t>(j)] = p.alpha * u[static_cast<std::size_t>(j)] +
                                         (1.0 - p.alpha) * v[static_cast<std::size_t>(j)];
      norm_sq += pre[static_cast<std::size_t>(j)] * pre[static_cast<std::size_t>(j)];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) {
      throw std::runtime_error("materialize_backward: degenerate mixture has zero norm");
    }
    double g_dot_unit = 0.0;
    for (int j = 0; j < dim; ++j) {
      g_dot_unit += g[static_cast<std::size_t>(j)] * pre[static_cast<std::size_t>(j)] / norm;
    }
    for (int j = 0; j < dim; ++j) {
      const double unit = pre[static_cast<std::size_t>(j)] / norm;
      const double g_pre = (g[static_cast<std::size_t>(j)] - g_dot_unit * unit) / norm;
      grad_dhat(p.src_i, j) += p.alpha * g_pre;
      grad_dhat(p.src_j, j) += (1.0 - p.alpha) * g_pre;
    }
  }
}

SampledIndices simple_sample(const ExtendedBatch& dhat, int c, int count_pos, int count_neg,
                             RngState& rng) {
  if (count_pos < 0 || count_neg < 0) {
    throw std::invalid_argument("simple_sample: counts must be non-negative");
  }
  std::vector<int> pos_pool;
  std::vector<int> neg_pool;
  for (int r = 0; r < dhat.size(); ++r) {
    (dhat.labels[static_cast<std::size_t>(r)] == c ? pos_pool : neg_pool).push_back(r);
  }
  if (count_pos > 0 && pos_pool.empty()) {
    throw std::runtime_error("simple_sample: no rows labeled " + std::to_string(c));
  }
  if (count_neg > 0 && neg_pool.empty()) {
    throw std::runtime_error("simple_sample: no rows labeled other than " + std::to_string(c));
  }
  SampledIndices out;
  out.pos.reserve(static_cast<std::size_t>(count_pos));
  out.neg.reserve(static_cast<std::size_t>(count_neg));
  for (int s = 0; s < count_pos; ++s) {
    out.pos.push_back(pos_pool[static_cast<std::size_t>(rng.next_below(pos_pool.size()))]);
  }
  for (int s = 0; s < count_neg; ++s) {
    out.neg.push_back(neg_pool[static_cast<std::size_t>(rng.next_below(neg_pool.size()))]);
  }
  return out;
}

HardSets hard_mine(const ExtendedBatch& dhat, std::span<const double> proto_c, int c, int k) {
  if (k < 1) throw std::invalid_argument("hard_mine: k must be >= 1");
  if (static_cast<int>(proto_c.size()) != dhat.embeddings.cols()) {
    throw std::invalid_argument("hard_mine: prototype width mismatch");
  }
  if (c < 0 || c >= dhat.num_classes) {
    throw std::invalid_argument("hard_mine: class " + std::to_string(c) + " out of range");
  }
  const int proto_row = dhat.prototype_row(c);
  std::vector<std::pair<double, int>> pos;  // (similarity, row)
  std::vector<std::pair<double, int>> neg;
  for (int r = 0; r < dhat.size(); ++r) {
    const double sim = dot(dhat.embeddings.row(r), proto_c);
    if (dhat.labels[static_cast<std::size_t>(r)] == c) {
      if (r != proto_row) pos.emplace_back(sim, r);
    } else {
      neg.emplace_back(sim, r);
    }
  }
  // Least similar positives; most similar negatives; ties keep smaller rows.
  std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  HardSets out;
  const std::size_t np = std::min(pos.size(), static_cast<std::size_t>(k));
  const std::size_t nn = std::min(neg.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < np; ++i) out.pos_rows.push_back(pos[i].second);
  for (std::size_t i = 0; i < nn; ++i) out.neg_rows.push_back(neg[i].second);
  return out;
}

std::vector<RowProvenance> hard_mixup(const std::vector<int>& hard_rows, int count, double lambda,
                                      RngState& rng) {
  if (count < 0) throw std::invalid_argument("hard_mixup: count must be non-negative");
  if (count > 0 && hard_rows.empty()) {
    throw std::invalid_argument("hard_mixup: empty hard set");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("hard_mixup: lambda must be positive");
  std::vector<RowProvenance> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::size_t n = hard_rows.size();
  for (int s = 0; s < count; ++s) {
    RowProvenance p;
    p.kind = RowProvenance::Kind::Synthetic;
    const std::size_t i = static_cast<std::size_t>(rng.next_below(n));
    std::size_t j = i;
    if (n >= 2) {
      j = static_cast<std::size_t>(rng.next_below(n - 1));
      if (j >= i) ++j;
    }
    p.src_i = hard_rows[i];
    p.src_j = hard_rows[j];
    p.alpha = rng.next_beta(lambda, lambda);
    out.push_back(p);
  }
  return out;
}

double syn_fraction(ScheduleState s) {
  if (s.T < 1) throw std::invalid_argument("syn_fraction: T must be >= 1");
  if (s.t < 0 || s.t > s.T) throw std::invalid_argument("syn_fraction: t must lie in [0, T]");
  return 0.5 + 0.5 * static_cast<double>(s.t) / static_cast<double>(s.T);
}

RebalancedSets build_rebalanced(const ExtendedBatch& dhat, const RebalanceConfig& cfg,
                                ScheduleState schedule, RngState& rng) {
  if (cfg.m_pos < 0 || cfg.m_neg < 0) {
    throw std::invalid_argument("build_rebalanced: target sizes must be non-negative");
  }
  const double frac = syn_fraction(schedule);
  auto synthetic_share = [&](int m) -> int {
    switch (cfg.policy) {
      case SynthPolicy::AllSampled: return 0;
      case SynthPolicy::AllSynthetic: return m;
      case SynthPolicy::Scheduled: break;
    }
    return static_cast<int>(std::llround(frac * static_cast<double>(m)));
  };

  RebalancedSets out;
  out.m_pos = cfg.m_pos;
  out.m_neg = cfg.m_neg;
  out.per_class.resize(static_cast<std::size_t>(dhat.num_classes));
  for (int c = 0; c < dhat.num_classes; ++c) {
    RngState rng_c = rng.child("rebalance-class", static_cast<std::uint64_t>(c));
    auto& sets = out.per_class[static_cast<std::size_t>(c)];

    int syn_pos = synthetic_share(cfg.m_pos);
    int syn_neg = synthetic_share(cfg.m_neg);
    const int samp_pos = cfg.m_pos - syn_pos;
    const int samp_neg = cfg.m_neg - syn_neg;

    const SampledIndices sampled = simple_sample(dhat, c, samp_pos, samp_neg, rng_c);
    for (int r : sampled.pos) {
      sets.pos_prov.push_back({RowProvenance::Kind::Sampled, r, -1, 1.0});
    }
    for (int r : sampled.neg) {
      sets.neg_prov.push_back({RowProvenance::Kind::Sampled, r, -1, 1.0});
    }

    const HardSets hard =
        (syn_pos > 0 || syn_neg > 0)
            ? hard_mine(dhat, dhat.embeddings.row(dhat.prototype_row(c)), c, cfg.k)
            : HardSets{};

    if (syn_pos > 0 && hard.pos_rows.empty()) {
      // No same-class rows besides the prototype: fall back to sampling.
      out.fallback_count += syn_pos;
      const SampledIndices extra = simple_sample(dhat, c, syn_pos, 0, rng_c);
      for (int r : extra.pos) {
        sets.pos_prov.push_back({RowProvenance::Kind::Sampled, r, -1, 1.0});
      }
      syn_pos = 0;
    }
    if (syn_neg > 0 && hard.neg_rows.empty()) {
      out.fallback_count += syn_neg;
      const SampledIndices extra = simple_sample(dhat, c, 0, syn_neg, rng_c);
      for (int r : extra.neg) {
        sets.neg_prov.push_back({RowProvenance::Kind::Sampled, r, -1, 1.0});
      }
      syn_neg = 0;
    }

    for (RowProvenance p : hard_mixup(hard.pos_rows, syn_pos, cfg.lambda, rng_c)) {
      sets.pos_prov.push_back(p);
    }
    for (RowProvenance p : hard_mixup(hard.neg_rows, syn_neg, cfg.lambda, rng_c)) {
      sets.neg_prov.push_back(p);
    }

    // A mixture of near-antipodal rows can collapse below representable
    // norm; pin such rows to their first source.
    for (auto* prov : {&sets.pos_prov, &sets.neg_prov}) {
      for (RowProvenance& p : *prov) {
        if (p.kind != RowProvenance::Kind::Synthetic) continue;
        double norm_sq = 0.0;
        for (int j = 0; j < dhat.embeddings.cols(); ++j) {
          double pre = p.alpha * dhat.embeddings(p.src_i, j) +
                       (1.0 - p.alpha) * dhat.embeddings(p.src_j, j);
          norm_sq += pre * pre;
        }
        if (std::sqrt(norm_sq) < kDegenerateMixNorm) p.alpha = 1.0;
      }
    }

    sets.pos = materialize_rows(dhat.embeddings, sets.pos_prov);
    sets.neg = materialize_rows(dhat.embeddings, sets.neg_prov);
  }
  return out;
}

void rematerialize(const DenseMatrix& dhat_rows, RebalancedSets& sets) {
  for (auto& cls : sets.per_class) {
    cls.pos = materialize_rows(dhat_rows, cls.pos_prov);
    cls.neg = materialize_rows(dhat_rows, cls.neg_prov);
  }
}

}  // namespace recl
