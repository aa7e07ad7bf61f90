#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recl/matrix.hpp"
#include "recl/nn.hpp"
#include "recl/rng.hpp"

namespace recl {

/// Batch embeddings extended with one prototype row per class, all rows
/// L2-normalized. source_norms holds the pre-normalization row norms so the
/// normalization can be differentiated.
struct ExtendedBatch {
  DenseMatrix embeddings;  // (n + C) x dim, unit rows
  std::vector<int> labels;
  std::vector<char> is_prototype;
  std::vector<double> source_norms;
  int num_classes = 0;

  int size() const { return embeddings.rows(); }
  /// Row index of class c's prototype.
  int prototype_row(int c) const { return embeddings.rows() - num_classes + c; }
};

/// Stacks z (one row per batch example) over the raw prototypes and
/// normalizes every row. z may have zero rows; prototype rows must be
/// nonzero. Prototype labels are their class ids.
ExtendedBatch extend_with_prototypes(const DenseMatrix& z, const std::vector<int>& labels,
                                     const DenseMatrix& proto_raw);

/// Gradient of the extension with respect to the raw stacked input
/// (z rows first, prototype rows last).
DenseMatrix extend_backward(const ExtendedBatch& dhat, const DenseMatrix& grad_rows);

/// How a rebalanced-target row was produced from the extended batch. The
/// row is a pure function of the extended batch given this record, so rows
/// can be rebuilt and differentiated exactly.
struct RowProvenance {
  enum class Kind { Sampled, Synthetic } kind = Kind::Sampled;
  int src_i = -1;      // Sampled: source row. Synthetic: first source row.
  int src_j = -1;      // Synthetic: second source row.
  double alpha = 1.0;  // Synthetic: mixing coefficient toward src_i.
};

/// Rebuilds target rows from provenance: a sampled row is a copy, a
/// synthetic row is normalize(alpha * row_i + (1 - alpha) * row_j).
DenseMatrix materialize_rows(const DenseMatrix& dhat_rows, const std::vector<RowProvenance>& prov);

/// Accumulates the gradient of materialize_rows into grad_dhat.
void materialize_backward(const DenseMatrix& dhat_rows, const std::vector<RowProvenance>& prov,
                          const DenseMatrix& grad_rows, DenseMatrix& grad_dhat);

/// Uniform with-replacement draws from the rows of dhat labeled c (pos) and
/// not labeled c (neg). Returns source row indices.
struct SampledIndices {
  std::vector<int> pos;
  std::vector<int> neg;
};
SampledIndices simple_sample(const ExtendedBatch& dhat, int c, int count_pos, int count_neg,
                             RngState& rng);

/// Hard example rows for class c relative to its unit prototype: positives
/// are the k rows labeled c least similar to it (its own prototype row
/// excluded), negatives the k rows labeled != c most similar. Truncated to
/// pool size; ties broken by smaller row index.
struct HardSets {
  std::vector<int> pos_rows;
  std::vector<int> neg_rows;
};
HardSets hard_mine(const ExtendedBatch& dhat, std::span<const double> proto_c, int c, int k);

/// Mixes random pairs within a hard set: provenance (i, j, alpha) with
/// alpha ~ Beta(lambda, lambda) and i != j whenever the set has >= 2 rows.
std::vector<RowProvenance> hard_mixup(const std::vector<int>& hard_rows, int count, double lambda,
                                      RngState& rng);

struct ScheduleState {
  long t = 0;
  long T = 1;
};

/// Synthetic share 0.5 + 0.5 * t / T; t in [0, T].
double syn_fraction(ScheduleState s);

enum class SynthPolicy { Scheduled, AllSampled, AllSynthetic };

struct RebalanceConfig {
  int k = 20;
  int m_pos = 10;
  int m_neg = 50;
  double lambda = 0.5;
  SynthPolicy policy = SynthPolicy::Scheduled;
};

/// Per-class rebalanced target sets: exactly m_pos positives and m_neg
/// negatives for every class, each row either sampled from the extended
/// batch or synthesized from its hard sets by mixup. A class whose hard set
/// is empty falls back to sampling for the synthetic share; fallback_count
/// reports how many rows that affected.
struct RebalancedSets {
  struct ClassSets {
    DenseMatrix pos;
    DenseMatrix neg;
    std::vector<RowProvenance> pos_prov;
    std::vector<RowProvenance> neg_prov;
  };
  std::vector<ClassSets> per_class;
  int m_pos = 0;
  int m_neg = 0;
  int fallback_count = 0;
};

RebalancedSets build_rebalanced(const ExtendedBatch& dhat, const RebalanceConfig& cfg,
                                ScheduleState schedule, RngState& rng);

/// Re-derives every target row in sets from dhat_rows; used to evaluate the
/// construction at a perturbed extended batch.
void rematerialize(const DenseMatrix& dhat_rows, RebalancedSets& sets);

}  // namespace recl
