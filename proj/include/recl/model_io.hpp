#pragma once

#include <string>
#include <vector>

#include "recl/trainer.hpp"

namespace recl {

/// Binary model file: magic + dimensions, the vocabulary, the training
/// priors, and every parameter tensor in params() order. Bytes are exact,
/// so a save/load round trip reproduces predictions bit for bit.
void save_model(const std::string& path, ModelState& state, const Vocabulary& vocab,
                const std::vector<double>& priors);

struct LoadedModel {
  ModelState state;
  Vocabulary vocab;
  std::vector<double> priors;
  int num_classes = 0;
};

LoadedModel load_model(const std::string& path);

}  // namespace recl
