#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recl/classifier.hpp"
#include "recl/contrastive.hpp"
#include "recl/corpus.hpp"
#include "recl/encoder.hpp"
#include "recl/metrics.hpp"
#include "recl/optim.hpp"
#include "recl/rebalance.hpp"

namespace recl {

enum class AblationVariant {
  Full,
  NoSSHM,      // no rebalanced target sets
  NoCL,        // classification branch only
  NoCLS,       // contrastive branch only; scored by a frozen-feature probe
  NoSS,        // targets all synthetic
  NoHM,        // targets all sampled
  NoMI,        // prototypes detached from the classifier weights
  NoDeltaBoth, // no compensation in either branch
  NoDeltaCLS,  // no compensation in the classification loss
  NoDeltaCL,   // uniform anchor weights in the contrastive loss
};

std::string to_string(AblationVariant v);
AblationVariant ablation_from_string(const std::string& name);
const std::vector<AblationVariant>& all_ablation_variants();

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-3;
  double weight_decay = 5e-4;
  double tau = 0.5;
  double mu = 1.0;
  double lambda = 0.5;
  int k = 20;
  int m_pos = 10;
  int m_neg = 50;
  int epochs = 20;
  std::uint64_t seed = 0;
  AblationVariant ablation = AblationVariant::Full;
  int embed_dim = 64;
  int hidden_dim = 128;
  int feat_dim = 64;
  int proj_dim = 64;
  int min_freq = 1;
  double augment_rate = 0.1;
};

void validate(const TrainConfig& cfg);

/// Pipeline switches implied by the ablation variant.
struct PipelineFlags {
  bool use_cls_loss = true;
  bool use_cl_loss = true;
  SynthPolicy synth_policy = SynthPolicy::Scheduled;
  int m_pos = 0;
  int m_neg = 0;
  bool delta_in_cls = true;
  AnchorWeight anchor_weight = AnchorWeight::NegLogPrior;
  bool tie_prototypes = true;
};

PipelineFlags apply_ablation(const TrainConfig& cfg);

/// All trainable state plus the optimizer and iteration bookkeeping.
struct ModelState {
  MeanEmbeddingEncoder encoder;
  Mlp2 proj_f;
  ClassifierBranch classifier;
  AdamW opt;
  long step = 0;
  long total_steps = 1;

  ModelState(const TrainConfig& cfg, int vocab_size, int num_classes, bool tie_prototypes);
  void init(RngState& rng);
  std::vector<ParamTensor*> params();
  int num_classes() { return classifier.num_classes(); }
};

struct LossBreakdown {
  double loss_cls = 0.0;
  double loss_cl = 0.0;
  double loss_overall = 0.0;
  int anchors_used = 0;
  int anchors_skipped = 0;
  int mixup_fallbacks = 0;
  double grad_norm = 0.0;
};

/// One optimizer step: classification loss with logit compensation, the
/// rebalanced contrastive loss through prototype extension, sampling and
/// mixup, combined as loss_cls + mu * loss_cl with both gradient paths
/// meeting at the shared features. A zero effective mu skips the
/// contrastive branch entirely, so the update matches a
/// classification-only step bit for bit.
LossBreakdown train_step(ModelState& state, const Batch& batch, const std::vector<double>& delta,
                         const TrainConfig& cfg, const PipelineFlags& flags, RngState& step_rng);

/// Argmax over raw logits (no compensation at inference).
MetricsReport evaluate(ModelState& state, const Vocabulary& vocab, const Dataset& ds);

/// Multinomial logistic probe on frozen features, for variants without a
/// trained classification loss. Deterministic given the seed.
struct ProbeResult {
  MetricsReport train;
  MetricsReport test;
};
ProbeResult probe_evaluate(ModelState& state, const Vocabulary& vocab, const Dataset& train_ds,
                           const Dataset& test_ds, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double loss_cls = 0.0;
  double loss_cl = 0.0;
  double loss_overall = 0.0;
  double train_acc = 0.0;
  double eval_acc = 0.0;
  double eval_macro_f1 = 0.0;
};

struct TrainInputs {
  Dataset train_org;
  Dataset pool;  // original + augmented views
  Dataset eval;
  Vocabulary vocab;
  std::vector<double> priors;  // over the pool
  std::vector<double> delta;   // log priors
};

/// Builds the 2N training pool (one augmented view per original example),
/// the vocabulary over that pool, and the prior-derived compensation.
TrainInputs prepare_train_inputs(const Dataset& train, const Dataset& eval,
                                 const SynonymLexicon& lexicon, const TrainConfig& cfg);

struct TrainResult {
  std::vector<EpochRecord> history;
  MetricsReport final_metrics;
};

struct TrainRun {
  ModelState state;
  TrainResult result;
};

TrainRun train_model(const TrainInputs& in, const TrainConfig& cfg);

struct AblationCell {
  AblationVariant variant = AblationVariant::Full;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

/// Trains variant x seed cells. Inputs are rebuilt per seed (and shared
/// across variants at that seed), so each cell reproduces a standalone
/// training run with that seed and variant.
std::vector<AblationCell> run_ablation_matrix(const Dataset& train, const Dataset& eval,
                                              const SynonymLexicon& lexicon,
                                              const TrainConfig& base,
                                              const std::vector<AblationVariant>& variants,
                                              const std::vector<std::uint64_t>& seeds);

}  // namespace recl
