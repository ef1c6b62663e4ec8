#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wordorder/rng.hpp"
#include "wordorder/vocabulary.hpp"

namespace wordorder {

/// Embedding -> L stacked LSTM layers -> affine -> softmax. The embedding
/// width equals the hidden width d.
///
/// Gate blocks inside each layer's 4d rows are ordered input, forget, cell
/// candidate, output; columns are [layer input ; previous hidden].
template <typename Scalar>
struct LstmParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::size_t vocab_size = 0;
  std::size_t hidden_size = 0;
  std::size_t num_layers = 0;
  Scalar dropout = 0;

  Matrix embedding;                  // |V| x d
  std::vector<Matrix> gate_weights;  // per layer, 4d x 2d
  std::vector<Vector> gate_biases;   // per layer, 4d
  Matrix output_weights;             // |V| x d
  Vector output_bias;                // |V|

  static LstmParams zeros(std::size_t vocab_size, std::size_t hidden_size, std::size_t num_layers);

  /// Throws ShapeError on inconsistent dimensions or non-finite entries.
  void validate() const;
  std::size_t parameter_count() const;

  /// Matrices and vectors in serialization order: embedding, then per layer
  /// gate weights and gate biases, then output weights and output bias.
  template <typename F>
  void for_each_tensor(F&& visit) {
    visit(embedding);
    for (std::size_t l = 0; l < num_layers; ++l) {
      visit(gate_weights[l]);
      visit(gate_biases[l]);
    }
    visit(output_weights);
    visit(output_bias);
  }
  template <typename F>
  void for_each_tensor(F&& visit) const {
    const_cast<LstmParams*>(this)->for_each_tensor([&](const auto& t) { visit(t); });
  }

  template <typename Other>
  LstmParams<Other> cast() const;

  bool operator==(const LstmParams& other) const;
};

/// Uniform weights in [-scale, scale] drawn from SplitMix64(seed) in
/// serialization order, then every forget-gate bias set to 1.
template <typename Scalar>
LstmParams<Scalar> init_params(std::size_t vocab_size, std::size_t hidden_size, std::size_t num_layers,
                               std::uint64_t seed, Scalar scale = Scalar(0.05));

template <typename Scalar>
struct LstmState {
  using Vector = typename LstmParams<Scalar>::Vector;
  std::vector<Vector> hidden;
  std::vector<Vector> cell;

  static LstmState zeros(const LstmParams<Scalar>& params);
  bool operator==(const LstmState&) const = default;
};

template <typename Scalar>
struct StepResult {
  typename LstmParams<Scalar>::Vector log_probs;
  LstmState<Scalar> state;
};

template <typename Scalar>
typename LstmParams<Scalar>::Vector log_softmax(const typename LstmParams<Scalar>::Vector& logits);

/// Log-distribution over the vocabulary read off the top hidden layer of `state`.
template <typename Scalar>
typename LstmParams<Scalar>::Vector output_distribution(const LstmParams<Scalar>& params,
                                                        const LstmState<Scalar>& state);

/// Consumes `word`: returns the successor state and the log-distribution of the
/// word that follows it.
template <typename Scalar>
StepResult<Scalar> forward_step(const LstmParams<Scalar>& params, WordId word, const LstmState<Scalar>& state);

// ---------------------------------------------------------------------------
// Training

struct LstmTrainConfig {
  double learning_rate = 1.0;
  double lr_decay = 0.5;      // multiplier applied after every epoch past decay_after
  std::size_t decay_after = 4;
  double clip = 5.0;          // global gradient norm
  std::size_t bptt = 35;
  std::size_t epochs = 6;
  double dropout = 0.3;
  std::uint64_t seed = 1;
};

template <typename Scalar>
struct WindowResult {
  Scalar loss = 0;  // mean negative log-likelihood over the window
  LstmParams<Scalar> gradients;
  LstmState<Scalar> final_state;
};

/// Teacher-forced loss of `targets[t]` given `inputs[0..t]`, starting from
/// `initial`, with exact gradients for every parameter. Dropout is applied to
/// non-recurrent connections when `rng` is given and `dropout` > 0.
template <typename Scalar>
WindowResult<Scalar> loss_and_gradients(const LstmParams<Scalar>& params, std::span<const WordId> inputs,
                                        std::span<const WordId> targets, const LstmState<Scalar>& initial,
                                        Scalar dropout = 0, SplitMix64* rng = nullptr);

template <typename Scalar>
struct TrainResult {
  LstmParams<Scalar> params;
  std::vector<double> epoch_perplexity;
};

using EpochCallback = std::function<void(std::size_t epoch, double perplexity, double learning_rate)>;

/// Truncated-BPTT SGD. Each sentence is trained as `<s> w.. </s>` from the zero
/// state (the decoder's starting point); windows of `bptt` steps carry state
/// forward without gradient. Sentence order is reshuffled each epoch from the
/// seed. Throws TrainingError on a non-finite loss.
template <typename Scalar>
TrainResult<Scalar> train(LstmParams<Scalar> params, const std::vector<std::vector<WordId>>& sentences,
                          const LstmTrainConfig& config, const EpochCallback& on_epoch = {});

/// Central differences of the mean loss over every parameter entry.
template <typename Scalar>
LstmParams<Scalar> numeric_gradients(const LstmParams<Scalar>& params, std::span<const WordId> inputs,
                                     std::span<const WordId> targets, double epsilon = 1e-5);

/// max |a - n| / max(|a| + |n|, 1e-6) over all entries.
template <typename Scalar>
double max_relative_error(const LstmParams<Scalar>& analytic, const LstmParams<Scalar>& numeric);

/// Analytic vs numeric gradients on `<s> sentence </s>` without dropout.
template <typename Scalar>
double gradient_check(const LstmParams<Scalar>& params, std::span<const WordId> sentence);

}  // namespace wordorder
