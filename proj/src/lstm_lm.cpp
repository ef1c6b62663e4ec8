#include "wordorder/lstm_lm.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "wordorder/error.hpp"

namespace wordorder {

namespace {

template <typename Scalar>
using Vec = typename LstmParams<Scalar>::Vector;
template <typename Scalar>
using Mat = typename LstmParams<Scalar>::Matrix;

template <typename Scalar>
Vec<Scalar> sigmoid(const Vec<Scalar>& z) {
  return (Scalar(1) + (-z.array()).exp()).inverse().matrix();
}

template <typename Scalar>
std::vector<std::pair<Scalar*, Eigen::Index>> tensor_views(LstmParams<Scalar>& p) {
  std::vector<std::pair<Scalar*, Eigen::Index>> views;
  p.for_each_tensor([&](auto& t) { views.emplace_back(t.data(), t.size()); });
  return views;
}

template <typename Scalar>
void check_word(const LstmParams<Scalar>& params, WordId word) {
  if (word >= params.vocab_size) {
    throw ContractError("word id " + std::to_string(word) + " outside LSTM vocabulary of size " +
                        std::to_string(params.vocab_size));
  }
}

template <typename Scalar>
void check_state(const LstmParams<Scalar>& params, const LstmState<Scalar>& state) {
  if (state.hidden.size() != params.num_layers || state.cell.size() != params.num_layers) {
    throw ShapeError("state has the wrong number of layers");
  }
  for (std::size_t l = 0; l < params.num_layers; ++l) {
    if (static_cast<std::size_t>(state.hidden[l].size()) != params.hidden_size ||
        static_cast<std::size_t>(state.cell[l].size()) != params.hidden_size) {
      throw ShapeError("state layer " + std::to_string(l) + " has the wrong width");
    }
  }
}

// Activations of one layer at one time step.
template <typename Scalar>
struct LayerStep {
  Vec<Scalar> input, h_prev, c_prev, i, f, g, o, c, tanh_c, h;
};

template <typename Scalar>
void layer_forward(const LstmParams<Scalar>& p, std::size_t l, LayerStep<Scalar>& s) {
  const auto d = static_cast<Eigen::Index>(p.hidden_size);
  const Mat<Scalar>& w = p.gate_weights[l];
  const Vec<Scalar> z = w.leftCols(d) * s.input + w.rightCols(d) * s.h_prev + p.gate_biases[l];
  s.i = sigmoid<Scalar>(z.segment(0, d));
  s.f = sigmoid<Scalar>(z.segment(d, d));
  s.g = z.segment(2 * d, d).array().tanh().matrix();
  s.o = sigmoid<Scalar>(z.segment(3 * d, d));
  s.c = s.f.cwiseProduct(s.c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
}

template <typename Scalar>
Vec<Scalar> dropout_mask(std::size_t size, Scalar rate, SplitMix64& rng) {
  Vec<Scalar> mask(static_cast<Eigen::Index>(size));
  const Scalar keep_scale = Scalar(1) / (Scalar(1) - rate);
  for (Eigen::Index k = 0; k < mask.size(); ++k) {
    mask[k] = rng.unit() < static_cast<double>(rate) ? Scalar(0) : keep_scale;
  }
  return mask;
}

template <typename Scalar>
Scalar sequence_loss(const LstmParams<Scalar>& params, std::span<const WordId> inputs,
                     std::span<const WordId> targets, const LstmState<Scalar>& initial) {
  LstmState<Scalar> state = initial;
  Scalar loss = 0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto step = forward_step(params, inputs[t], state);
    loss -= step.log_probs[targets[t]];
    state = std::move(step.state);
  }
  return loss / static_cast<Scalar>(inputs.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

template <typename Scalar>
LstmParams<Scalar> LstmParams<Scalar>::zeros(std::size_t vocab_size, std::size_t hidden_size,
                                             std::size_t num_layers) {
  if (vocab_size == 0 || hidden_size == 0 || num_layers == 0) throw ShapeError("LSTM dimensions must be positive");
  LstmParams p;
  p.vocab_size = vocab_size;
  p.hidden_size = hidden_size;
  p.num_layers = num_layers;
  const auto v = static_cast<Eigen::Index>(vocab_size);
  const auto d = static_cast<Eigen::Index>(hidden_size);
  p.embedding = Matrix::Zero(v, d);
  for (std::size_t l = 0; l < num_layers; ++l) {
    p.gate_weights.push_back(Matrix::Zero(4 * d, 2 * d));
    p.gate_biases.push_back(Vector::Zero(4 * d));
  }
  p.output_weights = Matrix::Zero(v, d);
  p.output_bias = Vector::Zero(v);
  return p;
}

template <typename Scalar>
void LstmParams<Scalar>::validate() const {
  const auto v = static_cast<Eigen::Index>(vocab_size);
  const auto d = static_cast<Eigen::Index>(hidden_size);
  auto expect = [](bool ok, const std::string& what) {
    if (!ok) throw ShapeError("LSTM parameters: " + what);
  };
  expect(vocab_size > 0 && hidden_size > 0 && num_layers > 0, "dimensions must be positive");
  expect(embedding.rows() == v && embedding.cols() == d, "embedding must be |V| x d");
  expect(gate_weights.size() == num_layers && gate_biases.size() == num_layers, "layer count");
  for (std::size_t l = 0; l < num_layers; ++l) {
    expect(gate_weights[l].rows() == 4 * d && gate_weights[l].cols() == 2 * d, "gate weights must be 4d x 2d");
    expect(gate_biases[l].size() == 4 * d, "gate bias must have 4d entries");
  }
  expect(output_weights.rows() == v && output_weights.cols() == d, "output weights must be |V| x d");
  expect(output_bias.size() == v, "output bias must have |V| entries");
  bool finite = true;
  for_each_tensor([&](const auto& t) { finite = finite && t.allFinite(); });
  expect(finite, "non-finite entries");
  expect(dropout >= 0 && dropout < 1, "dropout must be in [0, 1)");
}

template <typename Scalar>
std::size_t LstmParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

template <typename Scalar>
template <typename Other>
LstmParams<Other> LstmParams<Scalar>::cast() const {
  LstmParams<Other> out;
  out.vocab_size = vocab_size;
  out.hidden_size = hidden_size;
  out.num_layers = num_layers;
  out.dropout = static_cast<Other>(dropout);
  out.embedding = embedding.template cast<Other>();
  for (std::size_t l = 0; l < num_layers; ++l) {
    out.gate_weights.push_back(gate_weights[l].template cast<Other>());
    out.gate_biases.push_back(gate_biases[l].template cast<Other>());
  }
  out.output_weights = output_weights.template cast<Other>();
  out.output_bias = output_bias.template cast<Other>();
  return out;
}

template <typename Scalar>
bool LstmParams<Scalar>::operator==(const LstmParams& other) const {
  if (vocab_size != other.vocab_size || hidden_size != other.hidden_size || num_layers != other.num_layers ||
      dropout != other.dropout) {
    return false;
  }
  auto a = tensor_views(const_cast<LstmParams&>(*this));
  auto b = tensor_views(const_cast<LstmParams&>(other));
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].second != b[k].second || !std::equal(a[k].first, a[k].first + a[k].second, b[k].first)) return false;
  }
  return true;
}

template <typename Scalar>
LstmParams<Scalar> init_params(std::size_t vocab_size, std::size_t hidden_size, std::size_t num_layers,
                               std::uint64_t seed, Scalar scale) {
  auto p = LstmParams<Scalar>::zeros(vocab_size, hidden_size, num_layers);
  SplitMix64 rng(seed);
  for (auto [data, size] : tensor_views(p)) {
    for (Eigen::Index k = 0; k < size; ++k) data[k] = static_cast<Scalar>((2.0 * rng.unit() - 1.0) * scale);
  }
  const auto d = static_cast<Eigen::Index>(hidden_size);
  for (auto& b : p.gate_biases) b.segment(d, d).setOnes();
  return p;
}

template <typename Scalar>
LstmState<Scalar> LstmState<Scalar>::zeros(const LstmParams<Scalar>& params) {
  LstmState s;
  const auto d = static_cast<Eigen::Index>(params.hidden_size);
  s.hidden.assign(params.num_layers, Vector::Zero(d));
  s.cell.assign(params.num_layers, Vector::Zero(d));
  return s;
}

// ---------------------------------------------------------------------------
// Inference

template <typename Scalar>
typename LstmParams<Scalar>::Vector log_softmax(const typename LstmParams<Scalar>::Vector& logits) {
  const Scalar max = logits.maxCoeff();
  const Scalar log_z = max + std::log((logits.array() - max).exp().sum());
  return (logits.array() - log_z).matrix();
}

template <typename Scalar>
typename LstmParams<Scalar>::Vector output_distribution(const LstmParams<Scalar>& params,
                                                        const LstmState<Scalar>& state) {
  check_state(params, state);
  return log_softmax<Scalar>(params.output_weights * state.hidden.back() + params.output_bias);
}

template <typename Scalar>
StepResult<Scalar> forward_step(const LstmParams<Scalar>& params, WordId word, const LstmState<Scalar>& state) {
  check_word(params, word);
  check_state(params, state);
  StepResult<Scalar> result;
  result.state = state;
  LayerStep<Scalar> s;
  s.input = params.embedding.row(word).transpose();
  for (std::size_t l = 0; l < params.num_layers; ++l) {
    s.h_prev = state.hidden[l];
    s.c_prev = state.cell[l];
    layer_forward(params, l, s);
    result.state.hidden[l] = s.h;
    result.state.cell[l] = s.c;
    s.input = s.h;
  }
  result.log_probs = log_softmax<Scalar>(params.output_weights * s.h + params.output_bias);
  return result;
}

// ---------------------------------------------------------------------------
// Gradients

template <typename Scalar>
WindowResult<Scalar> loss_and_gradients(const LstmParams<Scalar>& params, std::span<const WordId> inputs,
                                        std::span<const WordId> targets, const LstmState<Scalar>& initial,
                                        Scalar dropout, SplitMix64* rng) {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw ShapeError("inputs and targets must be non-empty and of equal length");
  }
  check_state(params, initial);
  const std::size_t steps = inputs.size();
  const std::size_t layers = params.num_layers;
  const auto d = static_cast<Eigen::Index>(params.hidden_size);
  const bool use_dropout = rng != nullptr && dropout > 0;

  std::vector<std::vector<LayerStep<Scalar>>> cache(steps, std::vector<LayerStep<Scalar>>(layers));
  std::vector<std::vector<Vec<Scalar>>> masks(use_dropout ? steps : 0);
  std::vector<Vec<Scalar>> tops(steps);
  std::vector<Vec<Scalar>> probs(steps);

  WindowResult<Scalar> result;
  result.final_state = initial;
  auto& state = result.final_state;
  for (std::size_t t = 0; t < steps; ++t) {
    check_word(params, inputs[t]);
    check_word(params, targets[t]);
    if (use_dropout) {
      for (std::size_t m = 0; m <= layers; ++m) masks[t].push_back(dropout_mask(params.hidden_size, dropout, *rng));
    }
    Vec<Scalar> x = params.embedding.row(inputs[t]).transpose();
    if (use_dropout) x = x.cwiseProduct(masks[t][0]);
    for (std::size_t l = 0; l < layers; ++l) {
      auto& s = cache[t][l];
      s.input = x;
      s.h_prev = state.hidden[l];
      s.c_prev = state.cell[l];
      layer_forward(params, l, s);
      state.hidden[l] = s.h;
      state.cell[l] = s.c;
      x = use_dropout ? Vec<Scalar>(s.h.cwiseProduct(masks[t][l + 1])) : s.h;
    }
    tops[t] = x;
    const Vec<Scalar> log_probs = log_softmax<Scalar>(params.output_weights * x + params.output_bias);
    result.loss -= log_probs[targets[t]];
    probs[t] = log_probs.array().exp().matrix();
  }
  const auto scale = Scalar(1) / static_cast<Scalar>(steps);
  result.loss *= scale;

  auto& grad = result.gradients;
  grad = LstmParams<Scalar>::zeros(params.vocab_size, params.hidden_size, layers);
  grad.dropout = params.dropout;
  std::vector<Vec<Scalar>> dh_next(layers, Vec<Scalar>::Zero(d));
  std::vector<Vec<Scalar>> dc_next(layers, Vec<Scalar>::Zero(d));
  Vec<Scalar> dz(4 * d);
  for (std::size_t t = steps; t-- > 0;) {
    Vec<Scalar> dlogits = probs[t];
    dlogits[targets[t]] -= Scalar(1);
    dlogits *= scale;
    grad.output_weights.noalias() += dlogits * tops[t].transpose();
    grad.output_bias += dlogits;
    Vec<Scalar> dx = params.output_weights.transpose() * dlogits;
    for (std::size_t l = layers; l-- > 0;) {
      const auto& s = cache[t][l];
      if (use_dropout) dx = dx.cwiseProduct(masks[t][l + 1]);
      const Vec<Scalar> dh = dx + dh_next[l];
      const Vec<Scalar> dc =
          dh.cwiseProduct(s.o).cwiseProduct((Scalar(1) - s.tanh_c.array().square()).matrix()) + dc_next[l];
      dz.segment(0, d) = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((Scalar(1) - s.i.array()).matrix()));
      dz.segment(d, d) =
          dc.cwiseProduct(s.c_prev).cwiseProduct(s.f.cwiseProduct((Scalar(1) - s.f.array()).matrix()));
      dz.segment(2 * d, d) = dc.cwiseProduct(s.i).cwiseProduct((Scalar(1) - s.g.array().square()).matrix());
      dz.segment(3 * d, d) =
          dh.cwiseProduct(s.tanh_c).cwiseProduct(s.o.cwiseProduct((Scalar(1) - s.o.array()).matrix()));
      dc_next[l] = dc.cwiseProduct(s.f);
      const Mat<Scalar>& w = params.gate_weights[l];
      grad.gate_weights[l].leftCols(d).noalias() += dz * s.input.transpose();
      grad.gate_weights[l].rightCols(d).noalias() += dz * s.h_prev.transpose();
      grad.gate_biases[l] += dz;
      dx = w.leftCols(d).transpose() * dz;
      dh_next[l] = w.rightCols(d).transpose() * dz;
    }
    if (use_dropout) dx = dx.cwiseProduct(masks[t][0]);
    grad.embedding.row(inputs[t]) += dx.transpose();
  }
  return result;
}

template <typename Scalar>
TrainResult<Scalar> train(LstmParams<Scalar> params, const std::vector<std::vector<WordId>>& sentences,
                          const LstmTrainConfig& config, const EpochCallback& on_epoch) {
  if (sentences.empty()) throw TrainingError("training corpus is empty");
  if (config.bptt == 0 || config.epochs == 0 || config.clip <= 0 || config.learning_rate < 0 ||
      config.dropout < 0 || config.dropout >= 1) {
    throw ConfigError("invalid LSTM training configuration");
  }
  params.validate();
  params.dropout = static_cast<Scalar>(config.dropout);
  SplitMix64 rng(config.seed);
  TrainResult<Scalar> out;

  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double lr = config.learning_rate;
  std::vector<WordId> inputs;
  std::vector<WordId> targets;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (epoch > config.decay_after) lr *= config.lr_decay;
    fisher_yates(std::span<std::size_t>(order), rng);
    double nll = 0.0;
    std::size_t tokens = 0;
    std::size_t window = 0;
    for (auto index : order) {
      const auto& sentence = sentences[index];
      inputs.assign(1, special::kSentenceStart);
      inputs.insert(inputs.end(), sentence.begin(), sentence.end());
      targets.assign(sentence.begin(), sentence.end());
      targets.push_back(special::kSentenceEnd);
      auto state = LstmState<Scalar>::zeros(params);
      for (std::size_t start = 0; start < inputs.size(); start += config.bptt, ++window) {
        const std::size_t len = std::min(config.bptt, inputs.size() - start);
        auto step = loss_and_gradients(params, std::span<const WordId>(inputs).subspan(start, len),
                                       std::span<const WordId>(targets).subspan(start, len), state,
                                       static_cast<Scalar>(config.dropout), &rng);
        if (!std::isfinite(static_cast<double>(step.loss))) {
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", window " +
                              std::to_string(window));
        }
        nll += static_cast<double>(step.loss) * static_cast<double>(len);
        tokens += len;
        double norm_sq = 0.0;
        step.gradients.for_each_tensor([&](const auto& g) { norm_sq += static_cast<double>(g.squaredNorm()); });
        const double norm = std::sqrt(norm_sq);
        const double clip_scale = norm > config.clip ? config.clip / norm : 1.0;
        const auto factor = static_cast<Scalar>(lr * clip_scale);
        auto params_views = tensor_views(params);
        auto grad_views = tensor_views(step.gradients);
        for (std::size_t k = 0; k < params_views.size(); ++k) {
          Eigen::Map<Vec<Scalar>> p(params_views[k].first, params_views[k].second);
          Eigen::Map<const Vec<Scalar>> g(grad_views[k].first, grad_views[k].second);
          p -= factor * g;
        }
        state = std::move(step.final_state);
      }
    }
    const double ppl = std::exp(nll / static_cast<double>(tokens));
    out.epoch_perplexity.push_back(ppl);
    if (on_epoch) on_epoch(epoch, ppl, lr);
  }
  out.params = std::move(params);
  return out;
}

template <typename Scalar>
LstmParams<Scalar> numeric_gradients(const LstmParams<Scalar>& params, std::span<const WordId> inputs,
                                     std::span<const WordId> targets, double epsilon) {
  LstmParams<Scalar> work = params;
  LstmParams<Scalar> grad = LstmParams<Scalar>::zeros(params.vocab_size, params.hidden_size, params.num_layers);
  grad.dropout = params.dropout;
  const auto initial = LstmState<Scalar>::zeros(params);
  auto work_views = tensor_views(work);
  auto grad_views = tensor_views(grad);
  const auto eps = static_cast<Scalar>(epsilon);
  for (std::size_t k = 0; k < work_views.size(); ++k) {
    for (Eigen::Index e = 0; e < work_views[k].second; ++e) {
      Scalar& x = work_views[k].first[e];
      const Scalar saved = x;
      x = saved + eps;
      const Scalar plus = sequence_loss(work, inputs, targets, initial);
      x = saved - eps;
      const Scalar minus = sequence_loss(work, inputs, targets, initial);
      x = saved;
      grad_views[k].first[e] = (plus - minus) / (Scalar(2) * eps);
    }
  }
  return grad;
}

template <typename Scalar>
double max_relative_error(const LstmParams<Scalar>& analytic, const LstmParams<Scalar>& numeric) {
  auto a = tensor_views(const_cast<LstmParams<Scalar>&>(analytic));
  auto n = tensor_views(const_cast<LstmParams<Scalar>&>(numeric));
  if (a.size() != n.size()) throw ShapeError("gradient sets differ in shape");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].second != n[k].second) throw ShapeError("gradient sets differ in shape");
    for (Eigen::Index e = 0; e < a[k].second; ++e) {
      const double x = static_cast<double>(a[k].first[e]);
      const double y = static_cast<double>(n[k].first[e]);
      worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x) + std::abs(y), 1e-6));
    }
  }
  return worst;
}

template <typename Scalar>
double gradient_check(const LstmParams<Scalar>& params, std::span<const WordId> sentence) {
  std::vector<WordId> inputs{special::kSentenceStart};
  inputs.insert(inputs.end(), sentence.begin(), sentence.end());
  std::vector<WordId> targets(sentence.begin(), sentence.end());
  targets.push_back(special::kSentenceEnd);
  const auto analytic = loss_and_gradients(params, inputs, targets, LstmState<Scalar>::zeros(params));
  const auto numeric = numeric_gradients(params, inputs, targets);
  return max_relative_error(analytic.gradients, numeric);
}

#define WORDORDER_INSTANTIATE_LSTM(S)                                                                              \
  template struct LstmParams<S>;                                                                                   \
  template struct LstmState<S>;                                                                                    \
  template LstmParams<S> init_params<S>(std::size_t, std::size_t, std::size_t, std::uint64_t, S);                  \
  template LstmParams<S>::Vector log_softmax<S>(const LstmParams<S>::Vector&);                                     \
  template LstmParams<S>::Vector output_distribution<S>(const LstmParams<S>&, const LstmState<S>&);                \
  template StepResult<S> forward_step<S>(const LstmParams<S>&, WordId, const LstmState<S>&);                       \
  template WindowResult<S> loss_and_gradients<S>(const LstmParams<S>&, std::span<const WordId>,                    \
                                                 std::span<const WordId>, const LstmState<S>&, S, SplitMix64*);    \
  template TrainResult<S> train<S>(LstmParams<S>, const std::vector<std::vector<WordId>>&, const LstmTrainConfig&, \
                                   const EpochCallback&);                                                          \
  template LstmParams<S> numeric_gradients<S>(const LstmParams<S>&, std::span<const WordId>,                       \
                                              std::span<const WordId>, double);                                    \
  template double max_relative_error<S>(const LstmParams<S>&, const LstmParams<S>&);                               \
  template double gradient_check<S>(const LstmParams<S>&, std::span<const WordId>);

WORDORDER_INSTANTIATE_LSTM(double)
WORDORDER_INSTANTIATE_LSTM(float)
template LstmParams<float> LstmParams<double>::cast<float>() const;
template LstmParams<double> LstmParams<float>::cast<double>() const;
template LstmParams<double> LstmParams<double>::cast<double>() const;

#undef WORDORDER_INSTANTIATE_LSTM

}  // namespace wordorder
