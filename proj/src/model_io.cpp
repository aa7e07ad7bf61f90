#include "recl/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace recl {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'C', 'L', 'M', '0', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("load_model: truncated file");
  return v;
}

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::istream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("load_model: truncated file");
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("load_model: truncated file");
  return s;
}

}  // namespace

void save_model(const std::string& path, ModelState& state, const Vocabulary& vocab,
                const std::vector<double>& priors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write(kMagic, sizeof kMagic);
  write_u32(out, static_cast<std::uint32_t>(state.classifier.num_classes()));
  write_u32(out, static_cast<std::uint32_t>(state.encoder.vocab_size()));
  write_u32(out, static_cast<std::uint32_t>(state.encoder.embed_dim()));
  write_u32(out, static_cast<std::uint32_t>(state.encoder.head().fc1().out_dim()));
  write_u32(out, static_cast<std::uint32_t>(state.encoder.feat_dim()));
  write_u32(out, static_cast<std::uint32_t>(state.proj_f.out_dim()));
  write_u32(out, state.classifier.tied() ? 1u : 0u);

  if (vocab.size() != state.encoder.vocab_size()) {
    throw std::invalid_argument("save_model: vocabulary size does not match the embedding table");
  }
  for (int i = 0; i < vocab.size(); ++i) write_string(out, vocab.token_of(i));

  write_u32(out, static_cast<std::uint32_t>(priors.size()));
  write_doubles(out, priors.data(), priors.size());

  const auto params = state.params();
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const ParamTensor* p : params) {
    write_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    write_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    write_doubles(out, p->value.data(), p->value.size());
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("load_model: " + path + " is not a model file");
  }
  const int num_classes = static_cast<int>(read_u32(in));
  const int vocab_size = static_cast<int>(read_u32(in));
  TrainConfig cfg;
  cfg.embed_dim = static_cast<int>(read_u32(in));
  cfg.hidden_dim = static_cast<int>(read_u32(in));
  cfg.feat_dim = static_cast<int>(read_u32(in));
  cfg.proj_dim = static_cast<int>(read_u32(in));
  const bool tied = read_u32(in) == 1;

  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(vocab_size));
  for (int i = 0; i < vocab_size; ++i) tokens.push_back(read_string(in));

  const std::uint32_t prior_count = read_u32(in);
  std::vector<double> priors(prior_count);
  read_doubles(in, priors.data(), priors.size());

  LoadedModel out{ModelState(cfg, vocab_size, num_classes, tied),
                  Vocabulary::from_tokens(std::move(tokens)), std::move(priors), num_classes};

  const auto params = out.state.params();
  const std::uint32_t param_count = read_u32(in);
  if (param_count != params.size()) {
    throw std::runtime_error("load_model: parameter count mismatch");
  }
  for (ParamTensor* p : params) {
    const int rows = static_cast<int>(read_u32(in));
    const int cols = static_cast<int>(read_u32(in));
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw std::runtime_error("load_model: parameter shape mismatch");
    }
    read_doubles(in, p->value.data(), p->value.size());
  }
  return out;
}

}  // namespace recl
