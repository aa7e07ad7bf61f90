// Acceptance gate: ten numbered checks covering gradient fidelity, loss
// oracles, imbalance amplification, balance guarantees, closed-form
// identities, hard-mining equivalence, an end-to-end directional benchmark,
// byte determinism, the vanishing-gradient property, and a k-sweep harness.
// Each check prints one PASS/FAIL line; the process exits nonzero when any
// check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "recl/cli.hpp"
#include "recl/contrastive.hpp"
#include "recl/corpus.hpp"
#include "recl/gradcheck.hpp"
#include "recl/rebalance.hpp"
#include "recl/trainer.hpp"
#include "support/synthetic.hpp"

using namespace recl;
using recl::testsupport::composition_lexicon;
using recl::testsupport::composition_split;
using recl::testsupport::CompositionSpec;
using recl::testsupport::SyntheticSpec;
using recl::testsupport::synthetic_split;
using recl::testsupport::write_corpus;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

DenseMatrix random_unit_rows(int r, int c, RngState& rng) {
  DenseMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.next_normal();
  return l2_normalize_rows(m);
}

// ---------------------------------------------------------------------------
// Shared random-instance builder for the rebalanced loss: raw stacked input,
// its extension, and a frozen set construction that can be rebuilt at a
// perturbed input.
struct RebalancedInstance {
  ExtendedBatch dhat;
  RebalancedSets sets;
  std::vector<double> delta;
  std::vector<int> labels;
  DenseMatrix raw;
  int n = 0;
  int C = 0;
};

RebalancedInstance make_instance(RngState rng, int max_n, int max_c, int dim) {
  RebalancedInstance inst;
  inst.C = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_c - 1)));
  const int max_batch = std::max(1, max_n - inst.C);
  inst.n = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_batch)));
  inst.raw = DenseMatrix(inst.n + inst.C, dim);
  for (int i = 0; i < inst.raw.rows(); ++i)
    for (int j = 0; j < dim; ++j) inst.raw(i, j) = rng.next_normal();
  for (int i = 0; i < inst.n; ++i)
    inst.labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(inst.C))));

  DenseMatrix z(inst.n, dim);
  DenseMatrix proto(inst.C, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < inst.n; ++i) z(i, j) = inst.raw(i, j);
    for (int i = 0; i < inst.C; ++i) proto(i, j) = inst.raw(inst.n + i, j);
  }
  inst.dhat = extend_with_prototypes(z, inst.labels, proto);

  RebalanceConfig cfg;
  cfg.k = 1 + static_cast<int>(rng.next_below(4));
  cfg.m_pos = static_cast<int>(rng.next_below(4));
  cfg.m_neg = static_cast<int>(rng.next_below(5));
  RngState draw = rng.child("sets");
  inst.sets = build_rebalanced(inst.dhat, cfg, {1, 3}, draw);

  std::vector<double> prior(static_cast<std::size_t>(inst.C));
  double sum = 0.0;
  for (double& p : prior) {
    p = 0.1 + rng.next_double();
    sum += p;
  }
  for (double& p : prior) inst.delta.push_back(std::log(p / sum));
  return inst;
}

double rebalanced_chain_loss(const RebalancedInstance& inst, double tau, AnchorWeight w) {
  DenseMatrix z(inst.n, inst.raw.cols());
  DenseMatrix p(inst.C, inst.raw.cols());
  for (int j = 0; j < inst.raw.cols(); ++j) {
    for (int i = 0; i < inst.n; ++i) z(i, j) = inst.raw(i, j);
    for (int i = 0; i < inst.C; ++i) p(i, j) = inst.raw(inst.n + i, j);
  }
  ExtendedBatch dhat = extend_with_prototypes(z, inst.labels, p);
  RebalancedSets sets = inst.sets;
  rematerialize(dhat.embeddings, sets);
  return rebalanced_cl_loss(dhat, sets, inst.delta, tau, w).loss;
}

// ---------------------------------------------------------------------------
// 1. Gradient fidelity: analytic vs central finite differences, max relative
//    error <= 1e-4 over >= 100 random instances per loss.
Outcome criterion_gradients() {
  Outcome out;
  double worst = 0.0;

  {  // compensated classification loss wrt logits
    RngState rng(401);
    for (int t = 0; t < 120; ++t) {
      const int n = 1 + static_cast<int>(rng.next_below(6));
      const int C = 2 + static_cast<int>(rng.next_below(6));
      DenseMatrix logits(n, C);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < C; ++j) logits(i, j) = rng.next_normal();
      std::vector<int> labels;
      for (int i = 0; i < n; ++i)
        labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(C))));
      std::vector<double> delta;
      for (int j = 0; j < C; ++j) delta.push_back(rng.next_normal() * 0.5);

      ClassificationLoss res = logit_compensated_loss(logits, labels, delta);
      auto fn = [&](std::span<const double>) {
        return logit_compensated_loss(logits, labels, delta).loss;
      };
      const double err =
          finite_diff_check(fn, {logits.data(), logits.size()},
                            {res.grad_logits.data(), res.grad_logits.size()});
      worst = std::max(worst, err);
      if (err > 1e-4) {
        out.fail("classification instance " + std::to_string(t) + " rel err " +
                 std::to_string(err));
        break;
      }
    }
  }

  {  // pairwise contrastive loss wrt z
    RngState rng(402);
    for (int t = 0; t < 120; ++t) {
      const int n = 3 + static_cast<int>(rng.next_below(6));
      DenseMatrix z = random_unit_rows(n, 2 + static_cast<int>(rng.next_below(7)), rng);
      std::vector<std::pair<int, int>> pairs;
      const int n_pairs = 1 + static_cast<int>(rng.next_below(4));
      for (int p = 0; p < n_pairs; ++p) {
        int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
        if (j >= i) ++j;
        pairs.emplace_back(i, j);
      }
      const double tau = 0.3 + rng.next_double();
      UclResult res = ucl_loss(z, pairs, tau);
      auto fn = [&](std::span<const double>) { return ucl_loss(z, pairs, tau).loss; };
      const double err = finite_diff_check(fn, {z.data(), z.size()},
                                           {res.grad_z.data(), res.grad_z.size()});
      worst = std::max(worst, err);
      if (err > 1e-4) {
        out.fail("pairwise instance " + std::to_string(t) + " rel err " + std::to_string(err));
        break;
      }
    }
  }

  {  // supervised contrastive loss wrt z
    RngState rng(403);
    for (int t = 0; t < 120; ++t) {
      const int n = 4 + static_cast<int>(rng.next_below(5));
      DenseMatrix z = random_unit_rows(n, 2 + static_cast<int>(rng.next_below(7)), rng);
      std::vector<int> labels{0, 0};
      for (int i = 2; i < n; ++i) labels.push_back(static_cast<int>(rng.next_below(3)));
      const double tau = 0.3 + rng.next_double();
      SclResult res = scl_loss(z, labels, tau);
      auto fn = [&](std::span<const double>) { return scl_loss(z, labels, tau).loss; };
      const double err = finite_diff_check(fn, {z.data(), z.size()},
                                           {res.grad_z.data(), res.grad_z.size()});
      worst = std::max(worst, err);
      if (err > 1e-4) {
        out.fail("supervised instance " + std::to_string(t) + " rel err " + std::to_string(err));
        break;
      }
    }
  }

  {  // rebalanced contrastive loss through extension, sampling, and mixup
    RngState rng(404);
    for (int t = 0; t < 120; ++t) {
      RebalancedInstance inst =
          make_instance(rng.child("t", static_cast<std::uint64_t>(t)), 10, 4, 4);
      const double tau = 0.5;
      const AnchorWeight w = t % 2 ? AnchorWeight::Uniform : AnchorWeight::NegLogPrior;

      RebalancedClResult res = rebalanced_cl_loss(inst.dhat, inst.sets, inst.delta, tau, w);
      DenseMatrix grad_rows = res.grad_dhat;
      for (std::size_t c = 0; c < inst.sets.per_class.size(); ++c) {
        materialize_backward(inst.dhat.embeddings, inst.sets.per_class[c].pos_prov,
                             res.grad_pos[c], grad_rows);
        materialize_backward(inst.dhat.embeddings, inst.sets.per_class[c].neg_prov,
                             res.grad_neg[c], grad_rows);
      }
      DenseMatrix grad_raw = extend_backward(inst.dhat, grad_rows);

      auto fn = [&](std::span<const double>) { return rebalanced_chain_loss(inst, tau, w); };
      const double err = finite_diff_check(fn, {inst.raw.data(), inst.raw.size()},
                                           {grad_raw.data(), grad_raw.size()});
      worst = std::max(worst, err);
      if (err > 1e-4) {
        out.fail("rebalanced instance " + std::to_string(t) + " rel err " + std::to_string(err));
        break;
      }
    }
  }

  char buf[64];
  std::snprintf(buf, sizeof buf, "max rel err %.3g", worst);
  if (out.detail.empty()) out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 2. Loss oracles: direct-summation references within 1e-10, 1000 instances
//    per loss, <= 16 anchors.
Outcome criterion_oracles() {
  Outcome out;
  double worst = 0.0;

  {  // pairwise
    RngState rng(411);
    for (int t = 0; t < 1000; ++t) {
      const int n = 2 + static_cast<int>(rng.next_below(15));
      DenseMatrix z = random_unit_rows(n, 4, rng);
      std::vector<std::pair<int, int>> pairs;
      const int n_pairs = 1 + static_cast<int>(rng.next_below(5));
      for (int p = 0; p < n_pairs; ++p) {
        int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
        if (j >= i) ++j;
        pairs.emplace_back(i, j);
      }
      const double tau = 0.3 + rng.next_double();

      double expect = 0.0;
      for (const auto& [i, p] : pairs) {
        double den = 0.0;
        for (int k = 0; k < n; ++k)
          if (k != i) den += std::exp(dot(z.row(i), z.row(k)) / tau);
        expect += -std::log(std::exp(dot(z.row(i), z.row(p)) / tau) / den) / n;
      }
      expect /= static_cast<double>(pairs.size());

      const double got = ucl_loss(z, pairs, tau).loss;
      worst = std::max(worst, std::abs(got - expect));
      if (std::abs(got - expect) > 1e-10) {
        out.fail("pairwise instance " + std::to_string(t));
        break;
      }
    }
  }

  {  // supervised
    RngState rng(412);
    for (int t = 0; t < 1000; ++t) {
      const int n = 2 + static_cast<int>(rng.next_below(15));
      DenseMatrix z = random_unit_rows(n, 4, rng);
      std::vector<int> labels{0, 0};
      for (int i = 2; i < n; ++i) labels.push_back(static_cast<int>(rng.next_below(3)));
      const double tau = 0.3 + rng.next_double();

      double expect = 0.0;
      int used = 0;
      for (int i = 0; i < n; ++i) {
        int n_pos = 0;
        for (int k = 0; k < n; ++k)
          if (k != i && labels[static_cast<std::size_t>(k)] == labels[static_cast<std::size_t>(i)])
            ++n_pos;
        if (n_pos == 0) continue;
        ++used;
        double den = 0.0;
        for (int k = 0; k < n; ++k)
          if (k != i) den += std::exp(dot(z.row(i), z.row(k)) / tau);
        double anchor = 0.0;
        for (int p = 0; p < n; ++p) {
          if (p == i || labels[static_cast<std::size_t>(p)] != labels[static_cast<std::size_t>(i)])
            continue;
          anchor += -std::log(std::exp(dot(z.row(i), z.row(p)) / tau) / den);
        }
        expect += anchor / n_pos;
      }
      expect /= used;

      const double got = scl_loss(z, labels, tau).loss;
      worst = std::max(worst, std::abs(got - expect));
      if (std::abs(got - expect) > 1e-10) {
        out.fail("supervised instance " + std::to_string(t));
        break;
      }
    }
  }

  {  // rebalanced
    RngState rng(413);
    for (int t = 0; t < 1000; ++t) {
      RebalancedInstance inst =
          make_instance(rng.child("t", static_cast<std::uint64_t>(t)), 16, 4, 4);
      const double tau = 0.3 + 0.4 * (t % 3);
      const AnchorWeight w = t % 2 ? AnchorWeight::Uniform : AnchorWeight::NegLogPrior;

      const int n = inst.dhat.size();
      double expect = 0.0;
      for (int i = 0; i < n; ++i) {
        const int y = inst.dhat.labels[static_cast<std::size_t>(i)];
        const auto& cls = inst.sets.per_class[static_cast<std::size_t>(y)];
        std::vector<std::vector<double>> targets;
        std::vector<bool> positive;
        for (int r = 0; r < n; ++r) {
          if (r == i) continue;
          targets.emplace_back(inst.dhat.embeddings.row(r).begin(),
                               inst.dhat.embeddings.row(r).end());
          positive.push_back(inst.dhat.labels[static_cast<std::size_t>(r)] == y);
        }
        for (int r = 0; r < cls.pos.rows(); ++r) {
          targets.emplace_back(cls.pos.row(r).begin(), cls.pos.row(r).end());
          positive.push_back(true);
        }
        for (int r = 0; r < cls.neg.rows(); ++r) {
          targets.emplace_back(cls.neg.row(r).begin(), cls.neg.row(r).end());
          positive.push_back(false);
        }
        int n_pos = 0;
        for (bool b : positive) n_pos += b;
        if (n_pos == 0) continue;
        double den = 0.0;
        for (const auto& tgt : targets)
          den += std::exp(dot(inst.dhat.embeddings.row(i), std::span<const double>(tgt)) / tau);
        double anchor = 0.0;
        for (std::size_t k = 0; k < targets.size(); ++k) {
          if (!positive[k]) continue;
          anchor += -std::log(
              std::exp(dot(inst.dhat.embeddings.row(i), std::span<const double>(targets[k])) / tau) /
              den);
        }
        const double wy =
            w == AnchorWeight::Uniform ? 1.0 : -inst.delta[static_cast<std::size_t>(y)];
        expect += wy * anchor / n;
      }

      const double got = rebalanced_cl_loss(inst.dhat, inst.sets, inst.delta, tau, w).loss;
      worst = std::max(worst, std::abs(got - expect));
      if (std::abs(got - expect) > 1e-10) {
        out.fail("rebalanced instance " + std::to_string(t));
        break;
      }
    }
  }

  char buf[64];
  std::snprintf(buf, sizeof buf, "max abs err %.3g", worst);
  if (out.detail.empty()) out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 3. Imbalance amplification: the exact pair ratio equals brute-force pair
//    enumeration on 500 random batches, the pinned (64, 8) case gives 72 vs
//    64, and Monte-Carlo sampling on an ir=8 corpus lands within 25% of 64.
Outcome criterion_amplification() {
  Outcome out;

  {  // enumerated ordered pairs on random batches up to size 256
    RngState rng(421);
    for (int t = 0; t < 500; ++t) {
      const int C = 2 + static_cast<int>(rng.next_below(5));
      std::vector<int> counts;
      int total = 0;
      for (int c = 0; c < C; ++c) {
        if (256 - total < 2) break;
        const int n = 2 + static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(std::min(50, 256 - total - 1))));
        counts.push_back(n);
        total += n;
      }
      ContrastiveIr r = contrastive_imbalance_ratio(counts);
      if (!r.exact_valid) {
        out.fail("batch " + std::to_string(t) + " unexpectedly flagged");
        break;
      }
      long hi = 0;
      long lo = 1L << 60;
      for (int c = 0; c < C; ++c) {
        long pairs = 0;
        for (int a = 0; a < counts[static_cast<std::size_t>(c)]; ++a)
          for (int b = 0; b < counts[static_cast<std::size_t>(c)]; ++b)
            if (a != b) ++pairs;
        hi = std::max(hi, pairs);
        lo = std::min(lo, pairs);
      }
      if (r.exact != static_cast<double>(hi) / static_cast<double>(lo)) {
        out.fail("batch " + std::to_string(t) + " ratio mismatch");
        break;
      }
    }
  }

  {  // pinned case
    ContrastiveIr r = contrastive_imbalance_ratio({64, 8});
    if (!(r.exact_valid && r.exact == 72.0 && r.approx == 64.0)) {
      out.fail("counts (64, 8) expected exact 72 approx 64");
    }
  }

  {  // Monte-Carlo batches from an 800/100 corpus
    const int n0 = 800;
    const int n1 = 100;
    const int batch = 360;
    std::vector<int> population(n0 + n1, 0);
    for (int i = n0; i < n0 + n1; ++i) population[static_cast<std::size_t>(i)] = 1;

    RngState rng(422);
    std::vector<int> indices(population.size());
    std::iota(indices.begin(), indices.end(), 0);
    double sum = 0.0;
    int valid = 0;
    for (int t = 0; t < 1000; ++t) {
      RngState trial = rng.child("trial", static_cast<std::uint64_t>(t));
      for (int i = 0; i < batch; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + static_cast<std::size_t>(trial.next_below(
                                                               indices.size() - static_cast<std::size_t>(i)));
        std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
      }
      std::vector<int> counts(2, 0);
      for (int i = 0; i < batch; ++i)
        counts[static_cast<std::size_t>(population[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])])]++;
      ContrastiveIr r = contrastive_imbalance_ratio(counts);
      if (!r.exact_valid) continue;
      ++valid;
      sum += r.exact;
    }
    const double mean = sum / valid;
    char buf[96];
    std::snprintf(buf, sizeof buf, "empirical mean %.2f over %d batches (band 48..80)", mean,
                  valid);
    out.detail = buf;
    if (!(mean >= 48.0 && mean <= 80.0)) out.fail("Monte-Carlo mean outside 64 +/- 25%");
  }

  return out;
}

// ---------------------------------------------------------------------------
// 4. Balance guarantee: every class's target sets have exactly (m+, m-)
//    members across 1000 random batches, including batches missing classes,
//    and every class has at least one row in the extended batch.
Outcome criterion_balance() {
  Outcome out;
  RngState rng(431);
  for (int t = 0; t < 1000 && out.pass; ++t) {
    RngState trial = rng.child("t", static_cast<std::uint64_t>(t));
    const int C = 2 + static_cast<int>(trial.next_below(4));
    const int n = static_cast<int>(trial.next_below(20));  // often misses classes
    const int dim = 3;

    DenseMatrix z(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) z(i, j) = trial.next_normal();
    std::vector<int> labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(static_cast<int>(trial.next_below(static_cast<std::uint64_t>(C))));
    DenseMatrix proto(C, dim);
    for (int i = 0; i < C; ++i)
      for (int j = 0; j < dim; ++j) proto(i, j) = trial.next_normal();

    ExtendedBatch dhat = extend_with_prototypes(z, labels, proto);

    RebalanceConfig cfg;
    cfg.k = 1 + static_cast<int>(trial.next_below(6));
    cfg.m_pos = 1 + static_cast<int>(trial.next_below(8));
    cfg.m_neg = 1 + static_cast<int>(trial.next_below(12));
    const long T = 8;
    const long step = static_cast<long>(trial.next_below(static_cast<std::uint64_t>(T + 1)));
    RngState draw = trial.child("draw");
    RebalancedSets sets = build_rebalanced(dhat, cfg, {step, T}, draw);

    std::vector<int> members(static_cast<std::size_t>(C), 0);
    for (int i = 0; i < dhat.size(); ++i) members[static_cast<std::size_t>(dhat.labels[static_cast<std::size_t>(i)])]++;
    for (int c = 0; c < C; ++c) {
      if (members[static_cast<std::size_t>(c)] < 1) {
        out.fail("batch " + std::to_string(t) + ": class " + std::to_string(c) +
                 " missing from the extended batch");
        break;
      }
      const auto& cs = sets.per_class[static_cast<std::size_t>(c)];
      if (cs.pos.rows() != cfg.m_pos || static_cast<int>(cs.pos_prov.size()) != cfg.m_pos ||
          cs.neg.rows() != cfg.m_neg || static_cast<int>(cs.neg_prov.size()) != cfg.m_neg) {
        out.fail("batch " + std::to_string(t) + ": class " + std::to_string(c) +
                 " sets are not (m+, m-)");
        break;
      }
    }
  }
  if (out.pass) out.detail = "1000 batches, exact cardinalities";
  return out;
}

// ---------------------------------------------------------------------------
// 5. Closed-form identities.
Outcome criterion_identities() {
  Outcome out;

  {  // zero logits + compensation = -log prior
    const std::vector<double> priors{0.6, 0.3, 0.1};
    const std::vector<double> delta = compensation_from_priors(priors);
    for (int y = 0; y < 3; ++y) {
      DenseMatrix logits(1, 3);
      const double loss = logit_compensated_loss(logits, {y}, delta).loss;
      if (std::abs(loss - (-std::log(priors[static_cast<std::size_t>(y)]))) > 1e-12) {
        out.fail("zero-logit identity failed for class " + std::to_string(y));
      }
    }
  }

  {  // schedule endpoints, exactly
    if (syn_fraction({0, 7}) != 0.5) out.fail("schedule start is not exactly 0.5");
    if (syn_fraction({7, 7}) != 1.0) out.fail("schedule end is not exactly 1.0");
  }

  {  // mixup rows: unit norm within 1e-9 and on the source segment
    RngState rng(441);
    DenseMatrix rows = random_unit_rows(6, 4, rng);
    std::vector<int> pool{0, 1, 2, 3, 4, 5};
    RngState draw(442);
    std::vector<RowProvenance> prov = hard_mixup(pool, 200, 0.5, draw);
    DenseMatrix mixed = materialize_rows(rows, prov);
    for (int r = 0; r < mixed.rows(); ++r) {
      if (std::abs(norm2(mixed.row(r)) - 1.0) > 1e-9) {
        out.fail("mixup row " + std::to_string(r) + " is not unit norm");
        break;
      }
      const RowProvenance& p = prov[static_cast<std::size_t>(r)];
      std::vector<double> pre(4);
      for (int j = 0; j < 4; ++j)
        pre[static_cast<std::size_t>(j)] =
            p.alpha * rows(p.src_i, j) + (1.0 - p.alpha) * rows(p.src_j, j);
      const double pn = norm2(pre);
      for (int j = 0; j < 4; ++j) {
        if (std::abs(mixed(r, j) - pre[static_cast<std::size_t>(j)] / pn) > 1e-12) {
          out.fail("mixup row " + std::to_string(r) + " is off the source segment");
          break;
        }
      }
    }
  }

  {  // worked imbalance example
    Dataset ds;
    ds.num_classes = 3;
    const std::vector<int> counts{1000, 900, 890};
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
        Example ex;
        ex.label = c;
        ex.tokens = {"t" + std::to_string(c) + "_" + std::to_string(i)};
        ex.raw = ex.tokens[0];
        ds.examples.push_back(ex);
      }
    }
    recount(ds);
    Dataset imb = make_imbalanced(ds, 10.0, ImbalanceMode::Compounding, 1);
    if (imb.counts != std::vector<int>{1000, 100, 10}) {
      out.fail("steep imbalance profile did not yield (1000, 100, 10)");
    }
  }

  if (out.pass) out.detail = "all identities hold";
  return out;
}

// ---------------------------------------------------------------------------
// 6. Hard mining equals exhaustive argsort selection with tie-breaks.
Outcome criterion_hard_mining() {
  Outcome out;
  RngState rng(451);
  for (int t = 0; t < 500 && out.pass; ++t) {
    RngState trial = rng.child("t", static_cast<std::uint64_t>(t));
    const int C = 2 + static_cast<int>(trial.next_below(3));
    const int n = static_cast<int>(trial.next_below(static_cast<std::uint64_t>(64 - C)));
    const int dim = 3;

    DenseMatrix z(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) z(i, j) = trial.next_normal();
    std::vector<int> labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(static_cast<int>(trial.next_below(static_cast<std::uint64_t>(C))));
    // Occasionally duplicate a row to force exact similarity ties.
    if (n >= 2 && trial.next_double() < 0.5) {
      for (int j = 0; j < dim; ++j) z(1, j) = z(0, j);
      labels[1] = labels[0];
    }
    DenseMatrix proto(C, dim);
    for (int i = 0; i < C; ++i)
      for (int j = 0; j < dim; ++j) proto(i, j) = trial.next_normal();

    ExtendedBatch dhat = extend_with_prototypes(z, labels, proto);
    const int c = static_cast<int>(trial.next_below(static_cast<std::uint64_t>(C)));
    const int k = 1 + static_cast<int>(trial.next_below(10));
    std::vector<double> pc(dhat.embeddings.row(dhat.prototype_row(c)).begin(),
                           dhat.embeddings.row(dhat.prototype_row(c)).end());

    HardSets got = hard_mine(dhat, pc, c, k);

    std::vector<std::pair<double, int>> pos;
    std::vector<std::pair<double, int>> neg;
    for (int i = 0; i < dhat.size(); ++i) {
      const double sim = dot(dhat.embeddings.row(i), std::span<const double>(pc));
      if (dhat.labels[static_cast<std::size_t>(i)] == c) {
        if (i != dhat.prototype_row(c)) pos.emplace_back(sim, i);
      } else {
        neg.emplace_back(sim, i);
      }
    }
    std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> want_pos;
    for (std::size_t i = 0; i < pos.size() && i < static_cast<std::size_t>(k); ++i)
      want_pos.push_back(pos[i].second);
    std::vector<int> want_neg;
    for (std::size_t i = 0; i < neg.size() && i < static_cast<std::size_t>(k); ++i)
      want_neg.push_back(neg[i].second);

    if (got.pos_rows != want_pos || got.neg_rows != want_neg) {
      out.fail("case " + std::to_string(t) + " selection mismatch");
    }
  }
  if (out.pass) out.detail = "500 pools, exhaustive match";
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark corpus shared by criteria 7 and 10: the pair-composition corpus,
// where class identity lives in token co-occurrence rather than token
// presence and the synonym lexicon gives the augmenter real substitutions.
struct Benchmark {
  Dataset train;
  Dataset eval;
  SynonymLexicon lexicon;
};

Benchmark make_benchmark() {
  CompositionSpec spec;  // 5 classes, 12 pair tokens, 30% shared-token rate
  Benchmark b;
  Dataset balanced = composition_split(spec, 500, 97, "train");
  b.train = make_imbalanced(balanced, 50.0, ImbalanceMode::Exponential, 97);
  b.eval = composition_split(spec, 100, 97, "test");
  b.lexicon = composition_lexicon(spec);
  return b;
}

TrainConfig benchmark_config() {
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.learning_rate = 2e-3;
  cfg.weight_decay = 5e-4;
  cfg.tau = 1.0;
  cfg.mu = 0.002;
  cfg.lambda = 0.5;
  cfg.k = 10;
  cfg.m_pos = 8;
  cfg.m_neg = 24;
  cfg.epochs = 12;
  cfg.embed_dim = 32;
  cfg.hidden_dim = 64;
  cfg.feat_dim = 32;
  cfg.proj_dim = 32;
  cfg.augment_rate = 0.7;
  return cfg;
}

double mean_macro_f1(const Benchmark& bench, AblationVariant v,
                     const std::vector<std::uint64_t>& seeds) {
  double sum = 0.0;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = benchmark_config();
    cfg.ablation = v;
    cfg.seed = seed;
    TrainInputs in = prepare_train_inputs(bench.train, bench.eval, bench.lexicon, cfg);
    TrainRun run = train_model(in, cfg);
    sum += run.result.final_metrics.macro_f1;
  }
  return sum / static_cast<double>(seeds.size());
}

// 7. End-to-end directional check on the synthetic benchmark.
Outcome criterion_end_to_end() {
  Outcome out;
  Benchmark bench = make_benchmark();
  if (bench.train.counts != std::vector<int>{500, 188, 71, 27, 10}) {
    out.fail("benchmark counts are not (500, 188, 71, 27, 10)");
    return out;
  }

  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const double full = mean_macro_f1(bench, AblationVariant::Full, seeds);
  const double no_cl = mean_macro_f1(bench, AblationVariant::NoCL, seeds);
  const double no_sshm = mean_macro_f1(bench, AblationVariant::NoSSHM, seeds);

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "mean macro-F1: full %.4f, contrastive-off %.4f (need +0.02), targets-off %.4f "
                "(need +0.01)",
                full, no_cl, no_sshm);
  out.detail = buf;
  if (!(full >= no_cl + 0.02)) out.fail("margin over the contrastive-off variant is too small");
  if (!(full >= no_sshm + 0.01)) out.fail("margin over the targets-off variant is too small");
  return out;
}

// ---------------------------------------------------------------------------
// 8. Byte determinism of history.csv through the command-line path.
Outcome criterion_determinism() {
  Outcome out;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "recl_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.exclusive_tokens = 15;
  spec.shared_tokens = 10;
  write_corpus(synthetic_split(spec, 40, 61, "train"), (dir / "train.tsv").string());
  write_corpus(synthetic_split(spec, 10, 61, "test"), (dir / "test.tsv").string());

  std::ofstream cfg(dir / "config.json");
  cfg << "{\n"
      << "  \"train_corpus\": \"" << (dir / "train.tsv").string() << "\",\n"
      << "  \"test_corpus\": \"" << (dir / "test.tsv").string() << "\",\n"
      << "  \"num_classes\": 3,\n"
      << "  \"batch_size\": 16,\n  \"epochs\": 3,\n  \"k\": 4,\n  \"m_pos\": 3,\n"
      << "  \"m_neg\": 6,\n  \"embed_dim\": 8,\n  \"hidden_dim\": 12,\n  \"feat_dim\": 8,\n"
      << "  \"proj_dim\": 8,\n  \"seed\": 13\n}\n";
  cfg.close();

  {
    // The command logs per-epoch progress to stderr; keep the gate's output
    // to one line per criterion.
    std::ostringstream sink;
    std::streambuf* saved = std::cerr.rdbuf(sink.rdbuf());
    cli::cmd_train((dir / "config.json").string(), (dir / "a").string());
    cli::cmd_train((dir / "config.json").string(), (dir / "b").string());
    std::cerr.rdbuf(saved);
  }

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string ha = slurp(dir / "a" / "history.csv");
  const std::string hb = slurp(dir / "b" / "history.csv");
  if (ha.empty() || ha != hb) out.fail("history.csv bytes differ between identical runs");
  if (slurp(dir / "a" / "model.bin") != slurp(dir / "b" / "model.bin")) {
    out.fail("model.bin bytes differ between identical runs");
  }
  fs::remove_all(dir);
  if (out.pass) out.detail = "history.csv and model.bin byte-identical";
  return out;
}

// ---------------------------------------------------------------------------
// 9. Vanishing-gradient property: with everything else fixed, an anchor
//    facing hard negatives (cosine >= 0.9) gets a strictly larger gradient
//    than one facing easy negatives (cosine <= -0.9).
Outcome criterion_vanishing_gradient() {
  Outcome out;
  const int dim = 6;
  const double tau = 0.1;
  const int m_neg = 5;
  RngState rng(471);

  auto make_near = [&](std::span<const double> a, double target_sign, RngState& r) {
    // target_sign * a plus a perpendicular wobble of fixed length 0.3, so the
    // cosine with a is exactly +/- 1/sqrt(1.09) ~ 0.958, inside the band.
    std::vector<double> noise(a.size());
    for (double& x : noise) x = r.next_normal();
    const double na = dot(std::span<const double>(noise), a);
    for (std::size_t j = 0; j < noise.size(); ++j) noise[j] -= na * a[j];
    double pn = norm2(std::span<const double>(noise));
    if (pn < 1e-9) {  // vanishing wobble: fall back to any orthogonal basis direction
      std::fill(noise.begin(), noise.end(), 0.0);
      noise[std::abs(a[0]) < 0.9 ? 0 : 1] = 1.0;
      const double nb = dot(std::span<const double>(noise), a);
      for (std::size_t j = 0; j < noise.size(); ++j) noise[j] -= nb * a[j];
      pn = norm2(std::span<const double>(noise));
    }
    std::vector<double> v(a.begin(), a.end());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = target_sign * v[j] + 0.3 * noise[j] / pn;
    const double n = norm2(std::span<const double>(v));
    for (double& x : v) x /= n;
    return v;
  };

  int wins = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    RngState trial = rng.child("t", static_cast<std::uint64_t>(t));
    DenseMatrix rows = random_unit_rows(2, dim, trial);
    // The second batch row (the only other denominator term shared by both
    // configurations) sits in the far band so it cannot mask the comparison.
    {
      std::vector<double> far = make_near(rows.row(0), -1.0, trial);
      for (int j = 0; j < dim; ++j) rows(1, j) = far[static_cast<std::size_t>(j)];
    }

    ExtendedBatch dhat;
    dhat.embeddings = rows;
    dhat.labels = {0, 1};
    dhat.is_prototype = {0, 1};
    dhat.source_norms = {1.0, 1.0};
    dhat.num_classes = 2;

    // One positive at cosine exactly 0.5: halfway between aligned and
    // orthogonal, identical in both configurations.
    DenseMatrix pos(1, dim);
    {
      std::vector<double> wob = make_near(rows.row(0), 1.0, trial);
      // wob = a/|..| + perp; recover the unit perpendicular direction.
      std::vector<double> perp(wob.begin(), wob.end());
      const double pa = dot(std::span<const double>(perp), rows.row(0));
      for (std::size_t j = 0; j < perp.size(); ++j)
        perp[j] -= pa * rows(0, static_cast<int>(j));
      const double pn = norm2(std::span<const double>(perp));
      const double s3 = std::sqrt(3.0) / 2.0;
      for (int j = 0; j < dim; ++j)
        pos(0, j) = 0.5 * rows(0, j) + s3 * perp[static_cast<std::size_t>(j)] / pn;
    }

    auto build_sets = [&](double sign, RngState r) {
      RebalancedSets sets;
      sets.m_pos = 1;
      sets.m_neg = m_neg;
      sets.per_class.resize(2);
      sets.per_class[0].pos = pos;
      sets.per_class[0].pos_prov = {{RowProvenance::Kind::Sampled, 0, -1, 1.0}};
      sets.per_class[0].neg = DenseMatrix(m_neg, dim);
      for (int i = 0; i < m_neg; ++i) {
        std::vector<double> v = make_near(rows.row(0), sign, r);
        for (int j = 0; j < dim; ++j) sets.per_class[0].neg(i, j) = v[static_cast<std::size_t>(j)];
        sets.per_class[0].neg_prov.push_back({RowProvenance::Kind::Sampled, 1, -1, 1.0});
      }
      sets.per_class[1].pos = DenseMatrix(0, dim);
      sets.per_class[1].neg = DenseMatrix(0, dim);
      return sets;
    };

    RngState noise = trial.child("noise");
    RebalancedSets hard = build_sets(1.0, noise);
    RebalancedSets easy = build_sets(-1.0, noise);

    // Verify the cosine bands hold by construction.
    bool bands_ok = true;
    for (int i = 0; i < m_neg; ++i) {
      bands_ok = bands_ok && dot(hard.per_class[0].neg.row(i), rows.row(0)) >= 0.9;
      bands_ok = bands_ok && dot(easy.per_class[0].neg.row(i), rows.row(0)) <= -0.9;
    }
    if (!bands_ok) {
      out.fail("trial " + std::to_string(t) + " failed to construct the cosine bands");
      break;
    }

    const std::vector<double> delta{std::log(0.5), std::log(0.5)};
    RebalancedClResult rh = rebalanced_cl_loss(dhat, hard, delta, tau, AnchorWeight::Uniform);
    RebalancedClResult re = rebalanced_cl_loss(dhat, easy, delta, tau, AnchorWeight::Uniform);
    // Row 1 carries label 1 with no positives anywhere, so row 0 is the only
    // active anchor and its gradient row is the pure anchor gradient.
    if (rh.anchors_used != 1 || re.anchors_used != 1) {
      out.fail("trial " + std::to_string(t) + " has more than one active anchor");
      break;
    }
    const double gh = norm2(rh.grad_dhat.row(0));
    const double ge = norm2(re.grad_dhat.row(0));
    if (gh > ge) ++wins;
  }

  char buf[64];
  std::snprintf(buf, sizeof buf, "%d/%d hard > easy", wins, trials);
  if (out.detail.empty()) out.detail = buf;
  if (wins != trials) out.fail("strict inequality failed on some trials");
  return out;
}

// ---------------------------------------------------------------------------
// 10. k-sweep harness: a complete 4 x 5 table with finite scores.
Outcome criterion_k_sweep() {
  Outcome out;
  Benchmark bench = make_benchmark();
  const std::vector<int> ks{5, 10, 20, 40};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int rows = 0;
  for (int k : ks) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = benchmark_config();
      cfg.epochs = 2;  // structural sweep, not a tuned run
      cfg.k = k;
      cfg.seed = seed;
      try {
        TrainInputs in = prepare_train_inputs(bench.train, bench.eval, bench.lexicon, cfg);
        TrainRun run = train_model(in, cfg);
        const double f1 = run.result.final_metrics.macro_f1;
        if (!std::isfinite(f1) || f1 < 0.0 || f1 > 1.0) {
          out.fail("k=" + std::to_string(k) + " seed " + std::to_string(seed) +
                   " produced an invalid score");
        }
        ++rows;
      } catch (const std::exception& e) {
        out.fail("k=" + std::to_string(k) + " seed " + std::to_string(seed) + " threw: " +
                 e.what());
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d/20 rows complete", rows);
  if (out.detail.empty()) out.detail = buf;
  if (rows != 20) out.pass = false;
  return out;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*fn)();
    double budget_s;  // generous wall-clock ceiling; 0 means no bound
  };
  const Entry entries[] = {
      {"gradient fidelity vs finite differences", criterion_gradients, 120.0},
      {"loss values vs direct-summation oracles", criterion_oracles, 60.0},
      {"imbalance amplification of pair counts", criterion_amplification, 0.0},
      {"rebalanced target cardinality guarantee", criterion_balance, 0.0},
      {"closed-form identities", criterion_identities, 0.0},
      {"hard mining vs exhaustive selection", criterion_hard_mining, 0.0},
      {"end-to-end directional benchmark", criterion_end_to_end, 600.0},
      {"byte determinism of training artifacts", criterion_determinism, 0.0},
      {"vanishing-gradient property", criterion_vanishing_gradient, 0.0},
      {"k-sweep harness completeness", criterion_k_sweep, 0.0},
  };

  int failures = 0;
  int id = 0;
  for (const Entry& e : entries) {
    ++id;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    const double secs = elapsed_s(start);
    if (e.budget_s > 0.0 && secs > e.budget_s) {
      out.fail("exceeded the " + std::to_string(static_cast<int>(e.budget_s)) + " s budget");
    }
    std::printf("[%2d] %s  %s (%.1f s)%s%s\n", id, out.pass ? "PASS" : "FAIL", e.name, secs,
                out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }

  if (failures > 0) {
    std::printf("acceptance: %d of 10 checks failed\n", failures);
    return 1;
  }
  std::printf("acceptance: all 10 checks passed\n");
  return 0;
}
