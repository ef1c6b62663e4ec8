#include "wordorder/lstm_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "wordorder/error.hpp"
#include "wordorder/file_util.hpp"

namespace wordorder {

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'W', 'O', 'L', 'S', 'T', 'M', '\n', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

// Column-major Eigen storage written out row by row.
template <typename Derived>
void put_tensor(std::string& out, const Eigen::MatrixBase<Derived>& t) {
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) put<double>(out, t(r, c));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) throw LoadError("weight file is truncated");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  template <typename Derived>
  void get_tensor(Eigen::MatrixBase<Derived>& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = get<double>();
    }
  }

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw LoadError("weight file is truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

LstmLanguageModel::LstmLanguageModel(LstmParams<double> params, Eigen::VectorXd unigram_logprobs,
                                     std::uint64_t vocab_fingerprint)
    : params_(std::move(params)), unigram_(std::move(unigram_logprobs)), fingerprint_(vocab_fingerprint) {
  params_.validate();
  if (static_cast<std::size_t>(unigram_.size()) != params_.vocab_size) {
    throw ShapeError("unigram distribution size differs from the LSTM vocabulary");
  }
}

LstmLanguageModel::State LstmLanguageModel::init_state() const {
  State s;
  s.cells = LstmState<double>::zeros(params_);
  s.log_probs = std::make_shared<const Eigen::VectorXd>(output_distribution(params_, s.cells));
  return s;
}

LstmLanguageModel::State LstmLanguageModel::advance(WordId word, const State& state) const {
  auto step = forward_step(params_, word, state.cells);
  return State{std::move(step.state), std::make_shared<const Eigen::VectorXd>(std::move(step.log_probs))};
}

double LstmLanguageModel::logprob(WordId word, const State& state) const {
  if (word >= params_.vocab_size) {
    throw ContractError("word id " + std::to_string(word) + " outside LSTM vocabulary");
  }
  return (*state.log_probs)[word];
}

double LstmLanguageModel::unigram_logprob(WordId word) const {
  if (word >= params_.vocab_size) {
    throw ContractError("word id " + std::to_string(word) + " outside LSTM vocabulary");
  }
  return unigram_[word];
}

Eigen::VectorXd unigram_logprobs_from_corpus(const std::vector<std::vector<WordId>>& sentences,
                                             std::size_t vocab_size) {
  Eigen::VectorXd counts = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(vocab_size));
  counts[special::kSentenceStart] = 0.0;
  for (const auto& s : sentences) {
    for (auto w : s) {
      if (w >= vocab_size) throw ContractError("corpus id outside vocabulary");
      if (w != special::kSentenceStart) counts[w] += 1.0;
    }
    counts[special::kSentenceEnd] += 1.0;
  }
  const double total = counts.sum();
  Eigen::VectorXd out(counts.size());
  for (Eigen::Index w = 0; w < counts.size(); ++w) {
    out[w] = counts[w] == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(counts[w] / total);
  }
  return out;
}

std::string serialize_weights(const LstmLanguageModel& model) {
  const auto& p = model.params();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, p.vocab_size);
  put<std::uint64_t>(out, p.hidden_size);
  put<std::uint64_t>(out, p.num_layers);
  put<double>(out, p.dropout);
  put<std::uint64_t>(out, model.vocab_fingerprint());
  p.for_each_tensor([&](const auto& t) { put_tensor(out, t); });
  put_tensor(out, model.unigram_logprobs());
  return out;
}

LstmLanguageModel deserialize_weights(std::string_view bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(sizeof(kMagic)).data(), kMagic, sizeof(kMagic)) != 0) {
    throw LoadError("not an LSTM weight file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw LoadError("unsupported weight file version " + std::to_string(version));
  in.get<std::uint32_t>();
  const auto vocab = in.get<std::uint64_t>();
  const auto hidden = in.get<std::uint64_t>();
  const auto layers = in.get<std::uint64_t>();
  constexpr std::uint64_t kSane = 1u << 24;
  if (vocab == 0 || hidden == 0 || layers == 0 || vocab > kSane || hidden > kSane || layers > 64) {
    throw LoadError("implausible LSTM dimensions in weight file");
  }
  const auto expected = 56 + 8 * (2 * vocab * hidden + layers * (8 * hidden * hidden + 4 * hidden) + 2 * vocab);
  if (bytes.size() < expected) throw LoadError("weight file is truncated");
  auto params = LstmParams<double>::zeros(vocab, hidden, layers);
  params.dropout = in.get<double>();
  const auto fingerprint = in.get<std::uint64_t>();
  params.for_each_tensor([&](auto& t) { in.get_tensor(t); });
  Eigen::VectorXd unigram(static_cast<Eigen::Index>(vocab));
  in.get_tensor(unigram);
  if (!in.done()) throw LoadError("trailing bytes after weight tensors");
  try {
    return LstmLanguageModel(std::move(params), std::move(unigram), fingerprint);
  } catch (const ShapeError& e) {
    throw LoadError(e.what());
  }
}

void save_weights(const std::filesystem::path& path, const LstmLanguageModel& model) {
  write_file_atomic(path, serialize_weights(model));
}

LstmLanguageModel load_weights(const std::filesystem::path& path) { return deserialize_weights(read_file(path)); }

}  // namespace wordorder
