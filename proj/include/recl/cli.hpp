#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recl/trainer.hpp"

namespace recl::cli {

/// Fully resolved run configuration: hyperparameters plus data paths.
struct RunConfig {
  TrainConfig train;
  std::string train_corpus;
  std::string test_corpus;
  std::string lexicon;  // empty means no substitution lexicon
  int num_classes = 0;
};

/// Strict JSON with a flat key namespace; unknown keys are errors that name
/// the key. Missing optional keys take the TrainConfig defaults.
RunConfig load_run_config(const std::string& path);

struct PrepareOptions {
  std::string corpus_in;
  std::string corpus_out;
  int num_classes = 0;
  double ir = 1.0;
  std::string mode = "exponential";  // or "compounding"
  std::string lexicon;
  double rate = 0.0;
  std::uint64_t seed = 0;
};

/// Writes the imbalanced corpus, its augmented view (corpus_out + ".aug"),
/// and a counts summary (corpus_out + ".counts.json").
void cmd_prepare(const PrepareOptions& opt);

/// Trains per the config and fills out_dir with manifest.json (written
/// before training starts), history.csv, model.bin, and metrics.json.
void cmd_train(const std::string& config_path, const std::string& out_dir);

/// Loads a model, scores a corpus, writes the metrics report as JSON.
void cmd_eval(const std::string& model_path, const std::string& corpus_path,
              const std::string& out_path);

/// Full ablation matrix; CSV rows variant,seed,acc,macro_f1 plus one
/// mean +/- std summary row per variant.
void cmd_ablate(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
                const std::string& out_csv);

struct AnalyzeIrOptions {
  std::string corpus;
  int num_classes = 0;
  int batch_size = 64;
  int trials = 200;
  std::uint64_t seed = 0;
  std::string out_path;
};

/// Dataset imbalance ratio plus the Monte-Carlo contrastive ratio over
/// sampled batches, reported beside its squared-ir approximation.
void cmd_analyze_ir(const AnalyzeIrOptions& opt);

/// One CSV row per example: id, label, then the normalized projected
/// embedding coordinates at 9 significant digits.
void cmd_export_embeddings(const std::string& model_path, const std::string& corpus_path,
                           const std::string& out_csv);

/// Entry point behind main(); returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace recl::cli
