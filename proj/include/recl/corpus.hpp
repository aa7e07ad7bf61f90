#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "recl/rng.hpp"

namespace recl {

enum class View { Original, Augmented };

/// One text example. tokens holds the lowercased surface tokens; raw holds
/// the text exactly as read (or as re-rendered after substitution), which
/// lets file round-trips preserve untouched lines byte for byte.
struct Example {
  std::vector<std::string> tokens;
  std::string raw;
  int label = 0;
  View view = View::Original;
};

struct Dataset {
  std::vector<Example> examples;
  int num_classes = 0;
  std::vector<int> counts;  // per-class example counts, size num_classes

  std::size_t size() const { return examples.size(); }
};

/// Parses label<TAB>text lines. Labels must lie in [0, num_classes); the
/// text is lowercased and split on whitespace. Malformed lines, out-of-range
/// labels, empty text, and empty files are errors that name the line.
Dataset load_corpus(const std::string& path, int num_classes);

void recount(Dataset& ds);

/// Token string <-> id mapping. Id 0 is reserved for unknown tokens; known
/// ids start at 1 and are assigned by descending frequency, ties broken
/// lexicographically, so a rebuilt vocabulary is always identical.
class Vocabulary {
 public:
  static Vocabulary build(const Dataset& ds, int min_freq);

  int id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? 0 : it->second;
  }
  const std::string& token_of(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<int> encode(const Example& ex) const;

  /// Rebuilds the lookup from an explicit token list (id 0 must be the
  /// unknown slot); used by model deserialization.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

enum class ImbalanceMode {
  Exponential,   // n_c = round(n_max * ir^(-c / (C-1)))
  Compounding,   // n_c = round(n_max * ir^(-c)): adjacent classes differ by the full ratio
};

/// Subsamples a training split to an imbalanced one. Classes are ordered by
/// descending original count (ties by smaller label); position 0 keeps all
/// n_max examples and later positions keep the mode's retention count,
/// floored at 1 and capped at availability (capping emits a warning).
/// Kept examples are a seeded uniform subsample and retain corpus order.
Dataset make_imbalanced(const Dataset& ds, double ir, ImbalanceMode mode, std::uint64_t seed,
                        std::vector<std::string>* warnings = nullptr);

/// word -> replacement candidates. No replacement list is empty or contains
/// its own key.
struct SynonymLexicon {
  std::unordered_map<std::string, std::vector<std::string>> entries;

  /// Parses word<TAB>syn1,syn2,... lines, lowercasing everything. Duplicate
  /// keys, empty lists, and self-referencing entries are errors.
  static SynonymLexicon load(const std::string& path);
};

/// Returns an Augmented-view copy of every example, with each token that has
/// a lexicon entry independently replaced with probability rate by a uniform
/// choice among its candidates. Labels and token counts are preserved.
Dataset word_substitute(const Dataset& ds, const SynonymLexicon& lexicon, double rate,
                        std::uint64_t seed);

/// Empirical class prior P_y = count_y / N. Every class must be populated.
std::vector<double> class_priors(const Dataset& ds);

struct Batch {
  std::vector<std::vector<int>> token_ids;
  std::vector<int> labels;
  std::vector<int> dataset_indices;

  int size() const { return static_cast<int>(labels.size()); }
};

/// Splits a seeded permutation of the dataset into consecutive batches; the
/// last batch may be short and every example appears exactly once. Each
/// (seed, epoch) pair yields its own permutation.
std::vector<Batch> iter_batches(const Dataset& ds, const Vocabulary& vocab, int batch_size,
                                std::uint64_t seed, int epoch);

std::vector<std::string> tokenize(const std::string& text);

}  // namespace recl
