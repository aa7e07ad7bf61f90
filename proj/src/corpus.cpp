#include "recl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace recl {

namespace {

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void recount(Dataset& ds) {
  ds.counts.assign(static_cast<std::size_t>(ds.num_classes), 0);
  for (const Example& ex : ds.examples) ds.counts[static_cast<std::size_t>(ex.label)]++;
}

Dataset load_corpus(const std::string& path, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("load_corpus: num_classes must be >= 1");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + path);

  Dataset ds;
  ds.num_classes = num_classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tab = line.find('\t');
    if (tab == std::string::npos) fail_at(path, line_no, "expected label<TAB>text");
    int label = 0;
    const char* first = line.data();
    const char* last = line.data() + tab;
    auto [ptr, ec] = std::from_chars(first, last, label);
    if (ec != std::errc{} || ptr != last) fail_at(path, line_no, "label is not an integer");
    if (label < 0 || label >= num_classes) {
      fail_at(path, line_no,
              "label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    Example ex;
    ex.raw = line.substr(tab + 1);
    ex.tokens = tokenize(ex.raw);
    if (ex.tokens.empty()) fail_at(path, line_no, "empty text after label");
    ex.label = label;
    ex.view = View::Original;
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw std::runtime_error("load_corpus: " + path + " has no examples");
  recount(ds);
  return ds;
}

Vocabulary Vocabulary::build(const Dataset& ds, int min_freq) {
  if (min_freq < 1) throw std::invalid_argument("Vocabulary::build: min_freq must be >= 1");
  std::unordered_map<std::string, long> freq;
  for (const Example& ex : ds.examples) {
    for (const std::string& t : ex.tokens) freq[t]++;
  }
  std::vector<std::pair<std::string, long>> entries;
  entries.reserve(freq.size());
  for (auto& kv : freq) {
    if (kv.second >= min_freq) entries.emplace_back(kv.first, kv.second);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size() + 1);
  tokens.emplace_back("<unk>");
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty()) throw std::invalid_argument("Vocabulary: token list must include the unknown slot");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.ids_.reserve(v.tokens_.size());
  for (std::size_t i = 1; i < v.tokens_.size(); ++i) {
    v.ids_.emplace(v.tokens_[i], static_cast<int>(i));
  }
  return v;
}

std::vector<int> Vocabulary::encode(const Example& ex) const {
  std::vector<int> ids;
  ids.reserve(ex.tokens.size());
  for (const std::string& t : ex.tokens) ids.push_back(id_of(t));
  return ids;
}

Dataset make_imbalanced(const Dataset& ds, double ir, ImbalanceMode mode, std::uint64_t seed,
                        std::vector<std::string>* warnings) {
  if (!(ir >= 1.0)) throw std::invalid_argument("make_imbalanced: ir must be >= 1");
  const int C = ds.num_classes;
  for (int c = 0; c < C; ++c) {
    if (ds.counts[static_cast<std::size_t>(c)] == 0) {
      throw std::invalid_argument("make_imbalanced: class " + std::to_string(c) + " is empty");
    }
  }
  if (C == 1) return ds;

  std::vector<int> order(static_cast<std::size_t>(C));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    int ca = ds.counts[static_cast<std::size_t>(a)];
    int cb = ds.counts[static_cast<std::size_t>(b)];
    if (ca != cb) return ca > cb;
    return a < b;
  });
  const double n_max = static_cast<double>(ds.counts[static_cast<std::size_t>(order[0])]);

  std::vector<int> target(static_cast<std::size_t>(C), 0);
  for (int pos = 0; pos < C; ++pos) {
    const int label = order[static_cast<std::size_t>(pos)];
    const double expo = mode == ImbalanceMode::Exponential
                            ? -static_cast<double>(pos) / static_cast<double>(C - 1)
                            : -static_cast<double>(pos);
    long want = std::llround(n_max * std::pow(ir, expo));
    if (want < 1) want = 1;
    const int avail = ds.counts[static_cast<std::size_t>(label)];
    if (want > avail) {
      if (warnings) {
        warnings->push_back("class " + std::to_string(label) + ": requested " +
                            std::to_string(want) + " but only " + std::to_string(avail) +
                            " available; keeping all");
      }
      want = avail;
    }
    target[static_cast<std::size_t>(label)] = static_cast<int>(want);
  }

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.examples[i].label)].push_back(static_cast<int>(i));
  }
  RngState rng(seed);
  std::vector<char> keep(ds.examples.size(), 0);
  for (int c = 0; c < C; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    RngState cls_rng = rng.child("imbalance-class", static_cast<std::uint64_t>(c));
    cls_rng.shuffle(idx);
    for (int i = 0; i < target[static_cast<std::size_t>(c)]; ++i) {
      keep[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
    }
  }

  Dataset out;
  out.num_classes = C;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    if (keep[i]) out.examples.push_back(ds.examples[i]);
  }
  recount(out);
  return out;
}

SynonymLexicon SynonymLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("SynonymLexicon::load: cannot open " + path);
  SynonymLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) fail_at(path, line_no, "expected word<TAB>syn1,syn2,...");
    std::string word = lowercase(line.substr(0, tab));
    if (word.empty()) fail_at(path, line_no, "empty key");
    if (lex.entries.count(word)) fail_at(path, line_no, "duplicate entry for '" + word + "'");
    std::vector<std::string> syns;
    std::string rest = line.substr(tab + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto comma = rest.find(',', start);
      std::string syn = lowercase(rest.substr(start, comma == std::string::npos ? std::string::npos
                                                                                : comma - start));
      if (!syn.empty()) {
        if (syn == word) fail_at(path, line_no, "'" + word + "' lists itself as a replacement");
        syns.push_back(std::move(syn));
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (syns.empty()) fail_at(path, line_no, "no replacements for '" + word + "'");
    lex.entries.emplace(std::move(word), std::move(syns));
  }
  return lex;
}

Dataset word_substitute(const Dataset& ds, const SynonymLexicon& lexicon, double rate,
                        std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("word_substitute: rate must lie in [0, 1]");
  }
  RngState rng = RngState(seed).child("word-substitute");
  Dataset out;
  out.num_classes = ds.num_classes;
  out.examples.reserve(ds.examples.size());
  for (const Example& src : ds.examples) {
    Example ex;
    ex.label = src.label;
    ex.view = View::Augmented;
    ex.tokens = src.tokens;
    bool changed = false;
    for (std::string& tok : ex.tokens) {
      auto it = lexicon.entries.find(tok);
      if (it == lexicon.entries.end()) continue;
      if (rng.next_double() < rate) {
        tok = it->second[static_cast<std::size_t>(rng.next_below(it->second.size()))];
        changed = true;
      }
    }
    ex.raw = changed ? join_tokens(ex.tokens) : src.raw;
    out.examples.push_back(std::move(ex));
  }
  recount(out);
  return out;
}

std::vector<double> class_priors(const Dataset& ds) {
  if (ds.examples.empty()) throw std::invalid_argument("class_priors: empty dataset");
  std::vector<double> priors(static_cast<std::size_t>(ds.num_classes), 0.0);
  for (int c = 0; c < ds.num_classes; ++c) {
    const int count = ds.counts[static_cast<std::size_t>(c)];
    if (count == 0) {
      throw std::invalid_argument("class_priors: class " + std::to_string(c) + " is empty");
    }
    priors[static_cast<std::size_t>(c)] =
        static_cast<double>(count) / static_cast<double>(ds.examples.size());
  }
  return priors;
}

std::vector<Batch> iter_batches(const Dataset& ds, const Vocabulary& vocab, int batch_size,
                                std::uint64_t seed, int epoch) {
  if (batch_size < 2) throw std::invalid_argument("iter_batches: batch_size must be >= 2");
  if (ds.examples.empty()) throw std::invalid_argument("iter_batches: empty dataset");
  std::vector<int> perm(ds.examples.size());
  std::iota(perm.begin(), perm.end(), 0);
  RngState rng = RngState(seed).child("shuffle", static_cast<std::uint64_t>(epoch));
  rng.shuffle(perm);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < perm.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(perm.size(), start + static_cast<std::size_t>(batch_size));
    Batch b;
    b.token_ids.reserve(end - start);
    b.labels.reserve(end - start);
    b.dataset_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                             perm.begin() + static_cast<std::ptrdiff_t>(end));
    for (int idx : b.dataset_indices) {
      const Example& ex = ds.examples[static_cast<std::size_t>(idx)];
      b.token_ids.push_back(vocab.encode(ex));
      b.labels.push_back(ex.label);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace recl
