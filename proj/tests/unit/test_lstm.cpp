#include <cmath>
#include <limits>

#include "doctest.h"
#include "wordorder/error.hpp"
#include "wordorder/language_model.hpp"
#include "wordorder/lstm_lm.hpp"
#include "wordorder/lstm_model.hpp"

using namespace wordorder;

namespace {

const std::vector<std::vector<WordId>> kSentences{{7, 8, 9, 10}, {9, 8, 11}, {12, 7, 8}};

LstmLanguageModel small_model(std::uint64_t seed = 2) {
  auto params = init_params<double>(13, 5, 2, seed);
  return LstmLanguageModel(params, unigram_logprobs_from_corpus(kSentences, 13), 99);
}

}  // namespace

TEST_CASE("parameter shapes") {
  const auto p = init_params<double>(20, 8, 2, 1);
  CHECK(p.embedding.rows() == 20);
  CHECK(p.embedding.cols() == 8);
  REQUIRE(p.gate_weights.size() == 2);
  CHECK(p.gate_weights[0].rows() == 32);
  CHECK(p.gate_weights[0].cols() == 16);
  CHECK(p.output_weights.rows() == 20);
  CHECK(p.parameter_count() == 20 * 8 + 2 * (32 * 16 + 32) + 20 * 8 + 20);
  p.validate();
}

TEST_CASE("initialization is seeded and sets forget biases to one") {
  const auto a = init_params<double>(10, 4, 1, 5);
  const auto b = init_params<double>(10, 4, 1, 5);
  const auto c = init_params<double>(10, 4, 1, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.gate_biases[0](4 + i) == 1.0);
    CHECK(std::abs(a.gate_biases[0](i)) <= 0.05);
  }
  CHECK(a.embedding.cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("validate rejects bad shapes and values") {
  auto p = init_params<double>(10, 4, 1, 5);
  p.embedding(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(p.validate(), ShapeError);
  auto q = init_params<double>(10, 4, 1, 5);
  q.output_bias.resize(3);
  CHECK_THROWS_AS(q.validate(), ShapeError);
  CHECK_THROWS_AS(init_params<double>(0, 4, 1, 1), ShapeError);
}

TEST_CASE("every step yields a normalized distribution") {
  const auto p = init_params<double>(15, 6, 2, 9, 0.5);
  auto state = LstmState<double>::zeros(p);
  for (WordId w : {0, 7, 8, 14, 3, 9}) {
    auto step = forward_step(p, w, state);
    CHECK(step.log_probs.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
    state = step.state;
  }
}

TEST_CASE("float instantiation runs") {
  const auto p = init_params<float>(12, 4, 1, 3);
  auto step = forward_step(p, 7, LstmState<float>::zeros(p));
  CHECK(step.log_probs.array().exp().sum() == doctest::Approx(1.0f).epsilon(1e-5));
  const auto d = p.cast<double>();
  CHECK(d.embedding.rows() == 12);
}

TEST_CASE("analytic gradients match central differences") {
  for (std::size_t layers : {1, 2}) {
    const auto p = init_params<double>(11, 5, layers, 13, 0.5);
    CHECK(gradient_check(p, std::vector<WordId>{7, 9, 8, 10}) < 1e-4);
  }
}

TEST_CASE("gradients with carried state match central differences") {
  const auto p = init_params<double>(9, 4, 1, 8, 0.5);
  const std::vector<WordId> inputs{0, 7, 8};
  const std::vector<WordId> targets{7, 8, 1};
  const auto result = loss_and_gradients(p, inputs, targets, LstmState<double>::zeros(p));
  const auto numeric = numeric_gradients(p, inputs, targets);
  CHECK(max_relative_error(result.gradients, numeric) < 1e-4);
}

TEST_CASE("loss input validation") {
  const auto p = init_params<double>(9, 4, 1, 8);
  const std::vector<WordId> two{0, 7};
  const std::vector<WordId> one{7};
  CHECK_THROWS_AS(loss_and_gradients(p, two, one, LstmState<double>::zeros(p)), ShapeError);
}

TEST_CASE("training lowers perplexity and is reproducible") {
  LstmTrainConfig config;
  config.epochs = 8;
  config.dropout = 0.2;
  config.bptt = 3;
  config.seed = 4;
  std::vector<double> seen;
  const auto a = train<double>(init_params<double>(13, 8, 1, 4), kSentences, config,
                               [&](std::size_t, double ppl, double) { seen.push_back(ppl); });
  const auto b = train<double>(init_params<double>(13, 8, 1, 4), kSentences, config);
  CHECK(a.params == b.params);
  REQUIRE(a.epoch_perplexity.size() == 8);
  CHECK(seen == a.epoch_perplexity);
  CHECK(a.epoch_perplexity.back() < a.epoch_perplexity.front());
}

TEST_CASE("training rejects empty input and diverging runs") {
  LstmTrainConfig config;
  CHECK_THROWS_AS(train<double>(init_params<double>(13, 4, 1, 1), {}, config), TrainingError);
  auto broken = init_params<double>(13, 4, 1, 1);
  broken.output_bias.setConstant(std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(train<double>(broken, kSentences, config), DataError);
}

TEST_CASE("add-one unigram distribution") {
  const auto u = unigram_logprobs_from_corpus(kSentences, 13);
  CHECK(std::isinf(u(special::kSentenceStart)));
  // 10 words + 3 end markers, plus one for each of the 12 ids other than <s>.
  CHECK(u(8) == doctest::Approx(std::log(4.0 / 25)).epsilon(1e-12));
  CHECK(u(special::kSentenceEnd) == doctest::Approx(std::log(4.0 / 25)).epsilon(1e-12));
  CHECK(u(2) == doctest::Approx(std::log(1.0 / 25)).epsilon(1e-12));
}

TEST_CASE("language model wrapper agrees with forward steps") {
  const auto m = small_model();
  const auto s = sentence_start_state(m);
  const auto step = forward_step(m.params(), special::kSentenceStart, LstmState<double>::zeros(m.params()));
  CHECK(m.logprob(7, s) == step.log_probs(7));
  CHECK_THROWS_AS(m.logprob(13, s), ContractError);
}

TEST_CASE("weight file round trip") {
  const auto m = small_model();
  const auto bytes = serialize_weights(m);
  CHECK(bytes.substr(0, 8) == std::string("WOLSTM\n\0", 8));
  const auto back = deserialize_weights(bytes);
  CHECK(back == m);
  CHECK(serialize_weights(back) == bytes);
}

TEST_CASE("corrupt weight files") {
  const auto bytes = serialize_weights(small_model());
  CHECK_THROWS_AS(deserialize_weights("nonsense"), LoadError);
  CHECK_THROWS_AS(deserialize_weights(bytes.substr(0, bytes.size() - 3)), LoadError);
  CHECK_THROWS_AS(deserialize_weights(bytes + "x"), LoadError);
  auto wrong_version = bytes;
  wrong_version[8] = 7;
  CHECK_THROWS_AS(deserialize_weights(wrong_version), LoadError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_weights(bad_magic), LoadError);
}

TEST_CASE("memorization loss falls every epoch") {
  const std::vector<std::vector<WordId>> one{{7, 8, 9, 10, 11, 12, 6}};
  LstmTrainConfig config;
  config.epochs = 3;
  config.dropout = 0.0;
  config.learning_rate = 0.5;
  config.decay_after = 100;
  const auto result = train<double>(init_params<double>(13, 16, 1, 5), one, config);
  REQUIRE(result.epoch_perplexity.size() == 3);
  CHECK(result.epoch_perplexity[1] < result.epoch_perplexity[0]);
  CHECK(result.epoch_perplexity[2] < result.epoch_perplexity[1]);
}

TEST_CASE("advancing a copied state leaves the original untouched") {
  const auto m = small_model();
  const auto start = m.advance(7, sentence_start_state(m));
  const double before = m.logprob(8, start);
  auto a = start;
  auto b = start;
  for (WordId w : {8, 9, 10}) {
    a = m.advance(w, a);
    b = m.advance(static_cast<WordId>(w + 1), b);
    CHECK(m.logprob(8, start) == before);
  }
  CHECK(m.logprob(9, m.advance(8, start)) == m.logprob(9, m.advance(8, start)));
  CHECK(m.logprob(12, a) != m.logprob(12, b));
}
