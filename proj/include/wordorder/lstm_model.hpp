#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wordorder/lstm_lm.hpp"

namespace wordorder {

/// Decoding-side wrapper around trained double-precision LSTM parameters.
///
/// A state bundles the per-layer hidden/cell vectors with the (shared,
/// immutable) log-distribution over the word that comes next, so scoring many
/// candidate continuations from one state costs a single softmax.
class LstmLanguageModel {
 public:
  struct State {
    LstmState<double> cells;
    std::shared_ptr<const Eigen::VectorXd> log_probs;
  };

  /// `unigram_logprobs` backs the future-cost heuristic; it must be a
  /// normalized log-distribution over the same vocabulary.
  LstmLanguageModel(LstmParams<double> params, Eigen::VectorXd unigram_logprobs,
                    std::uint64_t vocab_fingerprint = 0);

  State init_state() const;
  State advance(WordId word, const State& state) const;
  double logprob(WordId word, const State& state) const;
  double unigram_logprob(WordId word) const;
  std::size_t vocab_size() const { return params_.vocab_size; }

  const LstmParams<double>& params() const { return params_; }
  const Eigen::VectorXd& unigram_logprobs() const { return unigram_; }
  std::uint64_t vocab_fingerprint() const { return fingerprint_; }

  friend bool operator==(const LstmLanguageModel& a, const LstmLanguageModel& b) {
    return a.fingerprint_ == b.fingerprint_ && a.params_ == b.params_ && a.unigram_.size() == b.unigram_.size() &&
           std::equal(a.unigram_.data(), a.unigram_.data() + a.unigram_.size(), b.unigram_.data());
  }

 private:
  LstmParams<double> params_;
  Eigen::VectorXd unigram_;
  std::uint64_t fingerprint_ = 0;
};

/// Add-one unigram estimate over every id but <s> (which gets log 0).
Eigen::VectorXd unigram_logprobs_from_corpus(const std::vector<std::vector<WordId>>& sentences,
                                             std::size_t vocab_size);

// Weight container, all integers and floats little-endian:
//
//   offset  size  field
//   0       8     magic "WOLSTM\n\0"
//   8       4     u32 format version (1)
//   12      4     u32 reserved (0)
//   16      8     u64 vocabulary size |V|
//   24      8     u64 hidden size d
//   32      8     u64 layer count L
//   40      8     f64 dropout
//   48      8     u64 vocabulary fingerprint
//   56      ...   f64 tensors, each row-major:
//                   embedding |V| x d
//                   for each layer: gate weights 4d x 2d, gate bias 4d
//                   output weights |V| x d, output bias |V|
//                   unigram log-probabilities |V|
std::string serialize_weights(const LstmLanguageModel& model);
/// Throws LoadError on bad magic, version, truncation, or trailing bytes.
LstmLanguageModel deserialize_weights(std::string_view bytes);

void save_weights(const std::filesystem::path& path, const LstmLanguageModel& model);
LstmLanguageModel load_weights(const std::filesystem::path& path);

}  // namespace wordorder
