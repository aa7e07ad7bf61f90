#include "recl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "recl/model_io.hpp"

namespace recl::cli {

namespace {

using nlohmann::json;

constexpr const char* kVersionTag = "recl-0.1.0";

std::string fmt_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_json_file(const std::string& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

ImbalanceMode mode_from_string(const std::string& name) {
  if (name == "exponential") return ImbalanceMode::Exponential;
  if (name == "compounding") return ImbalanceMode::Compounding;
  throw std::invalid_argument("unknown imbalance mode '" + name +
                              "' (expected exponential or compounding)");
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["train_corpus"] = cfg.train_corpus;
  j["test_corpus"] = cfg.test_corpus;
  j["lexicon"] = cfg.lexicon;
  j["num_classes"] = cfg.num_classes;
  j["batch_size"] = cfg.train.batch_size;
  j["learning_rate"] = cfg.train.learning_rate;
  j["weight_decay"] = cfg.train.weight_decay;
  j["tau"] = cfg.train.tau;
  j["mu"] = cfg.train.mu;
  j["lambda"] = cfg.train.lambda;
  j["k"] = cfg.train.k;
  j["m_pos"] = cfg.train.m_pos;
  j["m_neg"] = cfg.train.m_neg;
  j["epochs"] = cfg.train.epochs;
  j["seed"] = cfg.train.seed;
  j["ablation"] = to_string(cfg.train.ablation);
  j["embed_dim"] = cfg.train.embed_dim;
  j["hidden_dim"] = cfg.train.hidden_dim;
  j["feat_dim"] = cfg.train.feat_dim;
  j["proj_dim"] = cfg.train.proj_dim;
  j["min_freq"] = cfg.train.min_freq;
  j["augment_rate"] = cfg.train.augment_rate;
  return j;
}

json metrics_to_json(const MetricsReport& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["macro_f1"] = m.macro_f1;
  j["num_examples"] = m.num_examples;
  j["num_classes"] = static_cast<int>(m.f1.size());
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["confusion"] = m.confusion;
  return j;
}

SynonymLexicon load_lexicon_or_empty(const std::string& path) {
  if (path.empty()) return SynonymLexicon{};
  return SynonymLexicon::load(path);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error(path + ": config must be a JSON object");

  RunConfig cfg;
  bool have_train = false;
  bool have_test = false;
  bool have_classes = false;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "train_corpus") {
        cfg.train_corpus = value.get<std::string>();
        have_train = true;
      } else if (key == "test_corpus") {
        cfg.test_corpus = value.get<std::string>();
        have_test = true;
      } else if (key == "lexicon") {
        cfg.lexicon = value.get<std::string>();
      } else if (key == "num_classes") {
        cfg.num_classes = value.get<int>();
        have_classes = true;
      } else if (key == "batch_size") {
        cfg.train.batch_size = value.get<int>();
      } else if (key == "learning_rate") {
        cfg.train.learning_rate = value.get<double>();
      } else if (key == "weight_decay") {
        cfg.train.weight_decay = value.get<double>();
      } else if (key == "tau") {
        cfg.train.tau = value.get<double>();
      } else if (key == "mu") {
        cfg.train.mu = value.get<double>();
      } else if (key == "lambda") {
        cfg.train.lambda = value.get<double>();
      } else if (key == "k") {
        cfg.train.k = value.get<int>();
      } else if (key == "m_pos") {
        cfg.train.m_pos = value.get<int>();
      } else if (key == "m_neg") {
        cfg.train.m_neg = value.get<int>();
      } else if (key == "epochs") {
        cfg.train.epochs = value.get<int>();
      } else if (key == "seed") {
        cfg.train.seed = value.get<std::uint64_t>();
      } else if (key == "ablation") {
        cfg.train.ablation = ablation_from_string(value.get<std::string>());
      } else if (key == "embed_dim") {
        cfg.train.embed_dim = value.get<int>();
      } else if (key == "hidden_dim") {
        cfg.train.hidden_dim = value.get<int>();
      } else if (key == "feat_dim") {
        cfg.train.feat_dim = value.get<int>();
      } else if (key == "proj_dim") {
        cfg.train.proj_dim = value.get<int>();
      } else if (key == "min_freq") {
        cfg.train.min_freq = value.get<int>();
      } else if (key == "augment_rate") {
        cfg.train.augment_rate = value.get<double>();
      } else {
        throw std::runtime_error(path + ": unknown config key '" + key + "'");
      }
    } catch (const json::type_error&) {
      throw std::runtime_error(path + ": key '" + key + "' has the wrong type");
    }
  }
  if (!have_train) throw std::runtime_error(path + ": missing required key 'train_corpus'");
  if (!have_test) throw std::runtime_error(path + ": missing required key 'test_corpus'");
  if (!have_classes) throw std::runtime_error(path + ": missing required key 'num_classes'");
  if (cfg.num_classes < 2) throw std::runtime_error(path + ": num_classes must be >= 2");
  validate(cfg.train);
  return cfg;
}

void cmd_prepare(const PrepareOptions& opt) {
  if (opt.num_classes < 1) throw std::invalid_argument("prepare: --classes must be >= 1");
  const Dataset ds = load_corpus(opt.corpus_in, opt.num_classes);
  std::vector<std::string> warnings;
  const Dataset imb =
      make_imbalanced(ds, opt.ir, mode_from_string(opt.mode), opt.seed, &warnings);
  for (const std::string& w : warnings) std::cerr << "prepare: warning: " << w << "\n";

  std::string lines;
  for (const Example& ex : imb.examples) {
    lines += std::to_string(ex.label);
    lines += '\t';
    lines += ex.raw;
    lines += '\n';
  }
  write_text_file(opt.corpus_out, lines);

  const SynonymLexicon lex = load_lexicon_or_empty(opt.lexicon);
  const Dataset aug = word_substitute(imb, lex, opt.rate, opt.seed);
  std::string aug_lines;
  for (const Example& ex : aug.examples) {
    aug_lines += std::to_string(ex.label);
    aug_lines += '\t';
    aug_lines += ex.raw;
    aug_lines += '\n';
  }
  write_text_file(opt.corpus_out + ".aug", aug_lines);

  json summary;
  summary["input_counts"] = ds.counts;
  summary["output_counts"] = imb.counts;
  summary["num_classes"] = imb.num_classes;
  summary["requested_ir"] = opt.ir;
  summary["realized_ir"] = imbalance_ratio(imb.counts);
  summary["mode"] = opt.mode;
  summary["seed"] = opt.seed;
  summary["substitution_rate"] = opt.rate;
  summary["warnings"] = warnings;
  write_json_file(opt.corpus_out + ".counts.json", summary);
}

void cmd_train(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_run_config(config_path);
  std::filesystem::create_directories(out_dir);
  const std::string manifest_path = out_dir + "/manifest.json";
  const std::string history_path = out_dir + "/history.csv";
  const std::string model_path = out_dir + "/model.bin";
  const std::string metrics_path = out_dir + "/metrics.json";

  json manifest;
  manifest["version"] = kVersionTag;
  manifest["seed"] = cfg.train.seed;
  manifest["started_at"] = timestamp_utc();
  manifest["config"] = config_to_json(cfg);
  manifest["outputs"] = {{"history", history_path},
                         {"model", model_path},
                         {"metrics", metrics_path}};
  write_json_file(manifest_path, manifest);

  const Dataset train_ds = load_corpus(cfg.train_corpus, cfg.num_classes);
  const Dataset test_ds = load_corpus(cfg.test_corpus, cfg.num_classes);
  const SynonymLexicon lex = load_lexicon_or_empty(cfg.lexicon);
  const TrainInputs in = prepare_train_inputs(train_ds, test_ds, lex, cfg.train);

  TrainRun run = train_model(in, cfg.train);
  for (const EpochRecord& r : run.result.history) {
    std::cerr << "epoch " << r.epoch << " loss " << fmt_g9(r.loss_overall) << " train_acc "
              << fmt_g9(r.train_acc) << " eval_acc " << fmt_g9(r.eval_acc) << " eval_macro_f1 "
              << fmt_g9(r.eval_macro_f1) << "\n";
  }

  std::string csv = "epoch,loss_cls,loss_cl,loss_overall,train_acc,eval_acc,eval_macro_f1\n";
  for (const EpochRecord& r : run.result.history) {
    csv += std::to_string(r.epoch);
    csv += ',';
    csv += fmt_g9(r.loss_cls);
    csv += ',';
    csv += fmt_g9(r.loss_cl);
    csv += ',';
    csv += fmt_g9(r.loss_overall);
    csv += ',';
    csv += fmt_g9(r.train_acc);
    csv += ',';
    csv += fmt_g9(r.eval_acc);
    csv += ',';
    csv += fmt_g9(r.eval_macro_f1);
    csv += '\n';
  }
  write_text_file(history_path, csv);

  save_model(model_path, run.state, in.vocab, in.priors);
  write_json_file(metrics_path, metrics_to_json(run.result.final_metrics));

  manifest["finished_at"] = timestamp_utc();
  write_json_file(manifest_path, manifest);
}

void cmd_eval(const std::string& model_path, const std::string& corpus_path,
              const std::string& out_path) {
  LoadedModel model = load_model(model_path);
  const Dataset ds = load_corpus(corpus_path, model.num_classes);
  const MetricsReport metrics = evaluate(model.state, model.vocab, ds);
  const json doc = metrics_to_json(metrics);
  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_json_file(out_path, doc);
  }
}

void cmd_ablate(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
                const std::string& out_csv) {
  if (seeds.empty()) throw std::invalid_argument("ablate: need at least one seed");
  RunConfig cfg = load_run_config(config_path);
  const Dataset train_ds = load_corpus(cfg.train_corpus, cfg.num_classes);
  const Dataset test_ds = load_corpus(cfg.test_corpus, cfg.num_classes);
  const SynonymLexicon lex = load_lexicon_or_empty(cfg.lexicon);

  const std::vector<AblationCell> cells =
      run_ablation_matrix(train_ds, test_ds, lex, cfg.train, all_ablation_variants(), seeds);

  std::string csv = "variant,seed,acc,macro_f1\n";
  for (const AblationCell& cell : cells) {
    csv += to_string(cell.variant);
    csv += ',';
    csv += std::to_string(cell.seed);
    csv += ',';
    csv += fmt_g9(cell.metrics.accuracy);
    csv += ',';
    csv += fmt_g9(cell.metrics.macro_f1);
    csv += '\n';
    std::cerr << "ablate: " << to_string(cell.variant) << " seed " << cell.seed << " acc "
              << fmt_g9(cell.metrics.accuracy) << " macro_f1 " << fmt_g9(cell.metrics.macro_f1)
              << "\n";
  }
  for (AblationVariant v : all_ablation_variants()) {
    std::vector<double> accs;
    std::vector<double> f1s;
    for (const AblationCell& cell : cells) {
      if (cell.variant != v) continue;
      accs.push_back(cell.metrics.accuracy);
      f1s.push_back(cell.metrics.macro_f1);
    }
    auto mean_std = [](const std::vector<double>& xs) {
      const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      return std::make_pair(mean, std::sqrt(var / xs.size()));
    };
    const auto [acc_mean, acc_std] = mean_std(accs);
    const auto [f1_mean, f1_std] = mean_std(f1s);
    csv += to_string(v);
    csv += ",mean±std,";
    csv += fmt_g9(acc_mean);
    csv += "±";
    csv += fmt_g9(acc_std);
    csv += ',';
    csv += fmt_g9(f1_mean);
    csv += "±";
    csv += fmt_g9(f1_std);
    csv += '\n';
  }
  write_text_file(out_csv, csv);
}

void cmd_analyze_ir(const AnalyzeIrOptions& opt) {
  if (opt.trials < 1) throw std::invalid_argument("analyze-ir: --trials must be >= 1");
  const Dataset ds = load_corpus(opt.corpus, opt.num_classes);
  if (opt.batch_size < 2 || static_cast<std::size_t>(opt.batch_size) > ds.size()) {
    throw std::invalid_argument("analyze-ir: batch size must lie in [2, corpus size]");
  }
  const double ds_ir = imbalance_ratio(ds.counts);

  RngState rng(opt.seed);
  std::vector<int> indices(ds.size());
  std::iota(indices.begin(), indices.end(), 0);
  long valid = 0;
  long flagged = 0;
  double exact_sum = 0.0;
  double approx_sum = 0.0;
  for (int t = 0; t < opt.trials; ++t) {
    RngState trial_rng = rng.child("trial", static_cast<std::uint64_t>(t));
    // Partial Fisher-Yates: the first batch_size entries become a uniform
    // subset without replacement.
    for (int i = 0; i < opt.batch_size; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          static_cast<std::size_t>(trial_rng.next_below(indices.size() - static_cast<std::size_t>(i)));
      std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    }
    std::vector<int> counts(static_cast<std::size_t>(opt.num_classes), 0);
    for (int i = 0; i < opt.batch_size; ++i) {
      counts[static_cast<std::size_t>(
          ds.examples[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])].label)]++;
    }
    const ContrastiveIr ratio = contrastive_imbalance_ratio(counts);
    if (ratio.exact_valid) {
      ++valid;
      exact_sum += ratio.exact;
      approx_sum += ratio.approx;
    } else {
      ++flagged;
    }
  }

  json report;
  report["dataset_ir"] = ds_ir;
  report["dataset_ir_squared"] = ds_ir * ds_ir;
  report["batch_size"] = opt.batch_size;
  report["trials"] = opt.trials;
  report["valid_trials"] = valid;
  report["flagged_trials"] = flagged;
  report["empirical_contrastive_ir_mean"] = valid > 0 ? exact_sum / valid : 0.0;
  report["empirical_approx_ir_mean"] = valid > 0 ? approx_sum / valid : 0.0;
  if (opt.out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json_file(opt.out_path, report);
  }
}

void cmd_export_embeddings(const std::string& model_path, const std::string& corpus_path,
                           const std::string& out_csv) {
  LoadedModel model = load_model(model_path);
  const Dataset ds = load_corpus(corpus_path, model.num_classes);
  const int dim = model.state.proj_f.out_dim();

  std::string csv = "id,label";
  for (int j = 0; j < dim; ++j) csv += ",z_" + std::to_string(j);
  csv += '\n';

  const std::size_t chunk = 256;
  std::vector<std::vector<int>> ids;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t end = std::min(ds.size(), start + chunk);
    ids.clear();
    for (std::size_t i = start; i < end; ++i) ids.push_back(model.vocab.encode(ds.examples[i]));
    DenseMatrix feat = model.state.encoder.forward(ids);
    DenseMatrix z = l2_normalize_rows(model.state.proj_f.forward(feat));
    for (int r = 0; r < z.rows(); ++r) {
      const std::size_t i = start + static_cast<std::size_t>(r);
      csv += std::to_string(i);
      csv += ',';
      csv += std::to_string(ds.examples[i].label);
      for (int j = 0; j < dim; ++j) {
        csv += ',';
        csv += fmt_g9(z(r, j));
      }
      csv += '\n';
    }
  }
  write_text_file(out_csv, csv);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Imbalanced text classification with rebalanced contrastive learning"};
  app.require_subcommand(1);

  PrepareOptions prep;
  CLI::App* prepare = app.add_subcommand("prepare", "Subsample and augment a corpus");
  prepare->add_option("--in", prep.corpus_in, "Input corpus (label<TAB>text)")->required();
  prepare->add_option("--out", prep.corpus_out, "Output corpus path")->required();
  prepare->add_option("--classes", prep.num_classes, "Number of classes")->required();
  prepare->add_option("--ir", prep.ir, "Target imbalance ratio (>= 1)");
  prepare->add_option("--mode", prep.mode, "Imbalance mode: exponential or compounding");
  prepare->add_option("--lexicon", prep.lexicon, "Synonym lexicon path");
  prepare->add_option("--rate", prep.rate, "Per-token substitution probability");
  prepare->add_option("--seed", prep.seed, "Random seed");

  std::string train_config;
  std::string train_out = "run";
  bool train_seed_set = false;
  std::uint64_t train_seed = 0;
  CLI::App* train = app.add_subcommand("train", "Train a model from a JSON config");
  train->add_option("--config", train_config, "Config JSON path")->required();
  train->add_option("--out", train_out, "Output run directory");
  train->add_option("--seed", train_seed, "Override the config seed")
      ->each([&](const std::string&) { train_seed_set = true; });

  std::string eval_model;
  std::string eval_corpus;
  std::string eval_out;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a corpus with a trained model");
  eval_cmd->add_option("--model", eval_model, "Model file")->required();
  eval_cmd->add_option("--corpus", eval_corpus, "Corpus to score")->required();
  eval_cmd->add_option("--out", eval_out, "Metrics JSON path (stdout when omitted)");

  std::string ablate_config;
  std::vector<std::uint64_t> ablate_seeds;
  std::string ablate_out = "ablation.csv";
  CLI::App* ablate = app.add_subcommand("ablate", "Run the ablation matrix");
  ablate->add_option("--config", ablate_config, "Config JSON path")->required();
  ablate->add_option("--seeds", ablate_seeds, "Seeds (repeat or comma-separate)")
      ->required()
      ->delimiter(',');
  ablate->add_option("--out", ablate_out, "Output CSV path");

  AnalyzeIrOptions air;
  CLI::App* analyze = app.add_subcommand("analyze-ir", "Report dataset and batch imbalance ratios");
  analyze->add_option("--corpus", air.corpus, "Corpus path")->required();
  analyze->add_option("--classes", air.num_classes, "Number of classes")->required();
  analyze->add_option("--batch-size", air.batch_size, "Sampled batch size");
  analyze->add_option("--trials", air.trials, "Number of sampled batches");
  analyze->add_option("--seed", air.seed, "Random seed");
  analyze->add_option("--out", air.out_path, "Report JSON path (stdout when omitted)");

  std::string export_model;
  std::string export_corpus;
  std::string export_out = "embeddings.csv";
  CLI::App* exporter = app.add_subcommand("export-embeddings", "Dump normalized embeddings");
  exporter->add_option("--model", export_model, "Model file")->required();
  exporter->add_option("--corpus", export_corpus, "Corpus path")->required();
  exporter->add_option("--out", export_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (prepare->parsed()) {
      cmd_prepare(prep);
    } else if (train->parsed()) {
      if (train_seed_set) {
        // Rewrite the effective config through a temp file so the manifest
        // still snapshots exactly what ran.
        RunConfig cfg = load_run_config(train_config);
        cfg.train.seed = train_seed;
        const std::string tmp = train_out + ".config.json";
        std::filesystem::create_directories(train_out);
        write_json_file(tmp, config_to_json(cfg));
        cmd_train(tmp, train_out);
      } else {
        cmd_train(train_config, train_out);
      }
    } else if (eval_cmd->parsed()) {
      cmd_eval(eval_model, eval_corpus, eval_out);
    } else if (ablate->parsed()) {
      cmd_ablate(ablate_config, ablate_seeds, ablate_out);
    } else if (analyze->parsed()) {
      cmd_analyze_ir(air);
    } else if (exporter->parsed()) {
      cmd_export_embeddings(export_model, export_corpus, export_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace recl::cli
