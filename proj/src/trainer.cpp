#include "recl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recl {

namespace {

const char* kVariantNames[] = {"full",  "no_sshm", "no_cl", "no_cls",        "no_ss",
                               "no_hm", "no_mi",   "no_delta_both", "no_delta_cls", "no_delta_cl"};

int argmax_row(const DenseMatrix& m, int row) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c) {
    if (m(row, c) > m(row, best)) best = c;
  }
  return best;
}

/// Features for a dataset in evaluation mode, chunked to bound peak memory.
DenseMatrix dataset_features(ModelState& state, const Vocabulary& vocab, const Dataset& ds) {
  const int chunk = 256;
  DenseMatrix feats(static_cast<int>(ds.size()), state.encoder.feat_dim());
  std::vector<std::vector<int>> ids;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t end = std::min(ds.size(), start + chunk);
    ids.clear();
    for (std::size_t i = start; i < end; ++i) {
      ids.push_back(vocab.encode(ds.examples[i]));
    }
    DenseMatrix f = state.encoder.forward(ids);
    for (int r = 0; r < f.rows(); ++r) {
      for (int j = 0; j < f.cols(); ++j) feats(static_cast<int>(start) + r, j) = f(r, j);
    }
  }
  return feats;
}

}  // namespace

std::string to_string(AblationVariant v) { return kVariantNames[static_cast<int>(v)]; }

AblationVariant ablation_from_string(const std::string& name) {
  for (std::size_t i = 0; i < std::size(kVariantNames); ++i) {
    if (name == kVariantNames[i]) return static_cast<AblationVariant>(i);
  }
  throw std::invalid_argument("unknown ablation variant '" + name + "'");
}

const std::vector<AblationVariant>& all_ablation_variants() {
  static const std::vector<AblationVariant> all = {
      AblationVariant::Full,       AblationVariant::NoSSHM,     AblationVariant::NoCL,
      AblationVariant::NoCLS,      AblationVariant::NoSS,       AblationVariant::NoHM,
      AblationVariant::NoMI,       AblationVariant::NoDeltaBoth, AblationVariant::NoDeltaCLS,
      AblationVariant::NoDeltaCL};
  return all;
}

void validate(const TrainConfig& cfg) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TrainConfig: ") + what);
  };
  need(cfg.batch_size >= 2, "batch_size must be >= 2");
  need(cfg.learning_rate > 0.0, "learning_rate must be positive");
  need(cfg.weight_decay >= 0.0, "weight_decay must be non-negative");
  need(cfg.tau > 0.0, "tau must be positive");
  need(cfg.mu >= 0.0, "mu must be non-negative");
  need(cfg.lambda > 0.0, "lambda must be positive");
  need(cfg.k >= 1, "k must be >= 1");
  need(cfg.m_pos >= 0, "m_pos must be non-negative");
  need(cfg.m_neg >= 0, "m_neg must be non-negative");
  need(cfg.epochs >= 1, "epochs must be >= 1");
  need(cfg.embed_dim >= 1 && cfg.hidden_dim >= 1 && cfg.feat_dim >= 1 && cfg.proj_dim >= 1,
       "model dimensions must be >= 1");
  need(cfg.min_freq >= 1, "min_freq must be >= 1");
  need(cfg.augment_rate >= 0.0 && cfg.augment_rate <= 1.0, "augment_rate must lie in [0, 1]");
}

PipelineFlags apply_ablation(const TrainConfig& cfg) {
  PipelineFlags f;
  f.m_pos = cfg.m_pos;
  f.m_neg = cfg.m_neg;
  switch (cfg.ablation) {
    case AblationVariant::Full:
      break;
    case AblationVariant::NoSSHM:
      f.m_pos = 0;
      f.m_neg = 0;
      break;
    case AblationVariant::NoCL:
      f.use_cl_loss = false;
      break;
    case AblationVariant::NoCLS:
      f.use_cls_loss = false;
      break;
    case AblationVariant::NoSS:
      f.synth_policy = SynthPolicy::AllSynthetic;
      break;
    case AblationVariant::NoHM:
      f.synth_policy = SynthPolicy::AllSampled;
      break;
    case AblationVariant::NoMI:
      f.tie_prototypes = false;
      break;
    case AblationVariant::NoDeltaBoth:
      f.delta_in_cls = false;
      f.anchor_weight = AnchorWeight::Uniform;
      break;
    case AblationVariant::NoDeltaCLS:
      f.delta_in_cls = false;
      break;
    case AblationVariant::NoDeltaCL:
      f.anchor_weight = AnchorWeight::Uniform;
      break;
  }
  return f;
}

ModelState::ModelState(const TrainConfig& cfg, int vocab_size, int num_classes,
                       bool tie_prototypes)
    : encoder(vocab_size, cfg.embed_dim, cfg.hidden_dim, cfg.feat_dim),
      proj_f(cfg.feat_dim, cfg.hidden_dim, cfg.proj_dim),
      classifier(cfg.feat_dim, num_classes, cfg.hidden_dim, cfg.proj_dim, tie_prototypes),
      opt(AdamWConfig{cfg.learning_rate, cfg.weight_decay, 0.9, 0.999, 1e-8}) {}

void ModelState::init(RngState& rng) {
  encoder.init(rng);
  proj_f.init(rng);
  classifier.init(rng);
}

std::vector<ParamTensor*> ModelState::params() {
  std::vector<ParamTensor*> out;
  encoder.collect_params(out);
  proj_f.collect_params(out);
  classifier.collect_params(out);
  return out;
}

LossBreakdown train_step(ModelState& state, const Batch& batch, const std::vector<double>& delta,
                         const TrainConfig& cfg, const PipelineFlags& flags, RngState& step_rng) {
  if (batch.size() == 0) throw std::invalid_argument("train_step: empty batch");
  LossBreakdown out;

  DenseMatrix feat = state.encoder.forward(batch.token_ids);
  DenseMatrix logits = state.classifier.logits(feat);
  static const std::vector<double> kNoDelta;
  ClassificationLoss cls =
      logit_compensated_loss(logits, batch.labels, flags.delta_in_cls ? delta : kNoDelta);
  out.loss_cls = cls.loss;

  DenseMatrix grad_feat = flags.use_cls_loss ? state.classifier.logits_backward(cls.grad_logits)
                                             : DenseMatrix(feat.rows(), feat.cols());

  const double mu_eff = flags.use_cl_loss ? cfg.mu : 0.0;
  if (mu_eff != 0.0) {
    DenseMatrix proto_raw = state.classifier.prototypes();
    DenseMatrix z = state.proj_f.forward(feat);
    ExtendedBatch dhat = extend_with_prototypes(z, batch.labels, proto_raw);
    RebalanceConfig rcfg{cfg.k, flags.m_pos, flags.m_neg, cfg.lambda, flags.synth_policy};
    RebalancedSets rebal =
        build_rebalanced(dhat, rcfg, ScheduleState{state.step, state.total_steps}, step_rng);
    RebalancedClResult cl =
        rebalanced_cl_loss(dhat, rebal, delta, cfg.tau, flags.anchor_weight);
    out.loss_cl = cl.loss;
    out.anchors_used = cl.anchors_used;
    out.anchors_skipped = cl.anchors_skipped;
    out.mixup_fallbacks = rebal.fallback_count;

    scale_in_place(cl.grad_dhat, mu_eff);
    for (int c = 0; c < dhat.num_classes; ++c) {
      scale_in_place(cl.grad_pos[static_cast<std::size_t>(c)], mu_eff);
      scale_in_place(cl.grad_neg[static_cast<std::size_t>(c)], mu_eff);
      materialize_backward(dhat.embeddings, rebal.per_class[static_cast<std::size_t>(c)].pos_prov,
                           cl.grad_pos[static_cast<std::size_t>(c)], cl.grad_dhat);
      materialize_backward(dhat.embeddings, rebal.per_class[static_cast<std::size_t>(c)].neg_prov,
                           cl.grad_neg[static_cast<std::size_t>(c)], cl.grad_dhat);
    }
    DenseMatrix grad_stacked = extend_backward(dhat, cl.grad_dhat);

    DenseMatrix grad_z(z.rows(), z.cols());
    DenseMatrix grad_proto(proto_raw.rows(), proto_raw.cols());
    for (int r = 0; r < z.rows(); ++r) {
      for (int j = 0; j < z.cols(); ++j) grad_z(r, j) = grad_stacked(r, j);
    }
    for (int r = 0; r < proto_raw.rows(); ++r) {
      for (int j = 0; j < proto_raw.cols(); ++j) grad_proto(r, j) = grad_stacked(z.rows() + r, j);
    }
    axpy(grad_feat, state.proj_f.backward(grad_z));
    state.classifier.prototypes_backward(grad_proto);
  }

  out.loss_overall = (flags.use_cls_loss ? out.loss_cls : 0.0) + mu_eff * out.loss_cl;
  if (!std::isfinite(out.loss_overall)) {
    throw std::runtime_error("train_step: non-finite loss at step " + std::to_string(state.step) +
                             " (loss_cls=" + std::to_string(out.loss_cls) +
                             ", loss_cl=" + std::to_string(out.loss_cl) + ")");
  }

  state.encoder.backward(grad_feat);

  auto params = state.params();
  double norm_sq = 0.0;
  for (ParamTensor* p : params) {
    const double* g = p->grad.data();
    for (std::size_t i = 0; i < p->grad.size(); ++i) norm_sq += g[i] * g[i];
  }
  out.grad_norm = std::sqrt(norm_sq);

  state.opt.step(params);
  state.step++;
  return out;
}

MetricsReport evaluate(ModelState& state, const Vocabulary& vocab, const Dataset& ds) {
  if (ds.examples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  DenseMatrix feats = dataset_features(state, vocab, ds);
  DenseMatrix logits = state.classifier.logits(feats);
  std::vector<int> labels;
  std::vector<int> preds;
  labels.reserve(ds.size());
  preds.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    labels.push_back(ds.examples[i].label);
    preds.push_back(argmax_row(logits, static_cast<int>(i)));
  }
  return compute_metrics(labels, preds, ds.num_classes);
}

ProbeResult probe_evaluate(ModelState& state, const Vocabulary& vocab, const Dataset& train_ds,
                           const Dataset& test_ds, std::uint64_t seed) {
  if (train_ds.examples.empty() || test_ds.examples.empty()) {
    throw std::invalid_argument("probe_evaluate: empty dataset");
  }
  DenseMatrix train_feat = dataset_features(state, vocab, train_ds);
  DenseMatrix test_feat = dataset_features(state, vocab, test_ds);
  std::vector<int> train_labels;
  train_labels.reserve(train_ds.size());
  for (const Example& ex : train_ds.examples) train_labels.push_back(ex.label);

  AffineLayer probe(state.encoder.feat_dim(), train_ds.num_classes);
  RngState rng = RngState(seed).child("probe-init");
  probe.init(rng);
  AdamW opt(AdamWConfig{0.05, 0.0, 0.9, 0.999, 1e-8});
  std::vector<ParamTensor*> params;
  probe.collect_params(params);
  static const std::vector<double> kNoDelta;
  const int iterations = 300;
  for (int it = 0; it < iterations; ++it) {
    DenseMatrix logits = probe.forward(train_feat);
    ClassificationLoss loss = logit_compensated_loss(logits, train_labels, kNoDelta);
    probe.backward(loss.grad_logits);
    opt.step(params);
  }

  auto score = [&](const DenseMatrix& feats, const Dataset& ds) {
    DenseMatrix logits = probe.forward(feats);
    std::vector<int> labels;
    std::vector<int> preds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      labels.push_back(ds.examples[i].label);
      preds.push_back(argmax_row(logits, static_cast<int>(i)));
    }
    return compute_metrics(labels, preds, ds.num_classes);
  };
  ProbeResult out;
  out.train = score(train_feat, train_ds);
  out.test = score(test_feat, test_ds);
  return out;
}

TrainInputs prepare_train_inputs(const Dataset& train, const Dataset& eval,
                                 const SynonymLexicon& lexicon, const TrainConfig& cfg) {
  validate(cfg);
  if (train.num_classes != eval.num_classes) {
    throw std::invalid_argument("prepare_train_inputs: class count mismatch between splits");
  }
  TrainInputs in;
  in.train_org = train;
  in.eval = eval;
  Dataset aug = word_substitute(train, lexicon, cfg.augment_rate, cfg.seed);
  in.pool = train;
  in.pool.examples.insert(in.pool.examples.end(), aug.examples.begin(), aug.examples.end());
  recount(in.pool);
  in.vocab = Vocabulary::build(in.pool, cfg.min_freq);
  in.priors = class_priors(in.pool);
  in.delta = compensation_from_priors(in.priors);
  return in;
}

TrainRun train_model(const TrainInputs& in, const TrainConfig& cfg) {
  validate(cfg);
  const PipelineFlags flags = apply_ablation(cfg);
  const int C = in.pool.num_classes;
  ModelState state(cfg, in.vocab.size(), C, flags.tie_prototypes);
  RngState rng(cfg.seed);
  RngState init_rng = rng.child("init");
  state.init(init_rng);

  const long batches_per_epoch =
      static_cast<long>((in.pool.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                        static_cast<std::size_t>(cfg.batch_size));
  state.total_steps = std::max<long>(1, static_cast<long>(cfg.epochs) * batches_per_epoch);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<Batch> batches = iter_batches(in.pool, in.vocab, cfg.batch_size, cfg.seed, epoch);
    double sum_cls = 0.0;
    double sum_cl = 0.0;
    double sum_overall = 0.0;
    for (const Batch& b : batches) {
      RngState step_rng = rng.child("step", static_cast<std::uint64_t>(state.step));
      LossBreakdown lb = train_step(state, b, in.delta, cfg, flags, step_rng);
      sum_cls += lb.loss_cls;
      sum_cl += lb.loss_cl;
      sum_overall += lb.loss_overall;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(batches.size());
    rec.loss_cls = sum_cls * inv;
    rec.loss_cl = sum_cl * inv;
    rec.loss_overall = sum_overall * inv;
    if (flags.use_cls_loss) {
      rec.train_acc = evaluate(state, in.vocab, in.train_org).accuracy;
      MetricsReport ev = evaluate(state, in.vocab, in.eval);
      rec.eval_acc = ev.accuracy;
      rec.eval_macro_f1 = ev.macro_f1;
      if (epoch == cfg.epochs - 1) result.final_metrics = ev;
    } else {
      ProbeResult pr = probe_evaluate(state, in.vocab, in.train_org, in.eval,
                                      rng.child("probe", static_cast<std::uint64_t>(epoch)).seed());
      rec.train_acc = pr.train.accuracy;
      rec.eval_acc = pr.test.accuracy;
      rec.eval_macro_f1 = pr.test.macro_f1;
      if (epoch == cfg.epochs - 1) result.final_metrics = pr.test;
    }
    result.history.push_back(rec);
  }
  return TrainRun{std::move(state), std::move(result)};
}

std::vector<AblationCell> run_ablation_matrix(const Dataset& train, const Dataset& eval,
                                              const SynonymLexicon& lexicon,
                                              const TrainConfig& base,
                                              const std::vector<AblationVariant>& variants,
                                              const std::vector<std::uint64_t>& seeds) {
  if (variants.empty() || seeds.empty()) {
    throw std::invalid_argument("run_ablation_matrix: variants and seeds must be non-empty");
  }
  std::vector<AblationCell> cells;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg_seed = base;
    cfg_seed.seed = seed;
    const TrainInputs in = prepare_train_inputs(train, eval, lexicon, cfg_seed);
    for (AblationVariant v : variants) {
      TrainConfig cfg = cfg_seed;
      cfg.ablation = v;
      TrainRun run = train_model(in, cfg);
      cells.push_back(AblationCell{v, seed, run.result.final_metrics});
    }
  }
  return cells;
}

}  // namespace recl
