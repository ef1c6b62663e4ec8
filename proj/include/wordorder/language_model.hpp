#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include "wordorder/corpus.hpp"
#include "wordorder/error.hpp"
#include "wordorder/vocabulary.hpp"

namespace wordorder {

/// The state/transition/next-word contract shared by every model the decoder
/// can drive. States are values: copying one and advancing the copy leaves the
/// original untouched. All log-probabilities are natural log.
template <typename M>
concept LanguageModel = std::copy_constructible<typename M::State> &&
    requires(const M& model, WordId word, const typename M::State& state) {
  { model.init_state() } -> std::same_as<typename M::State>;
  { model.advance(word, state) } -> std::same_as<typename M::State>;
  { model.logprob(word, state) } -> std::convertible_to<double>;
  { model.unigram_logprob(word) } -> std::convertible_to<double>;
  { model.vocab_size() } -> std::convertible_to<std::size_t>;
};

template <LanguageModel Model>
void require_in_vocabulary(const Model& model, WordId word) {
  if (word >= model.vocab_size()) {
    throw ContractError("word id " + std::to_string(word) + " outside model vocabulary of size " +
                        std::to_string(model.vocab_size()));
  }
}

/// h0 advanced through the sentence-start token.
template <LanguageModel Model>
typename Model::State sentence_start_state(const Model& model) {
  return model.advance(special::kSentenceStart, model.init_state());
}

/// f: sum of log q(w_i, h_{i-1}) over `words`, conditioned on sentence start.
/// The end-of-sentence token is not implied.
template <LanguageModel Model>
double score_sequence(const Model& model, std::span<const WordId> words) {
  for (auto w : words) require_in_vocabulary(model, w);
  double score = 0.0;
  auto state = sentence_start_state(model);
  for (auto w : words) {
    score += model.logprob(w, state);
    state = model.advance(w, state);
  }
  return score;
}

/// Unigram log-probability of the words of one phrase, markers included.
template <LanguageModel Model>
double phrase_future_cost(const Model& model, const Phrase& phrase) {
  double cost = 0.0;
  for (auto w : phrase.word_ids) cost += model.unigram_logprob(w);
  return cost;
}

/// g(R): summed per phrase, phrases taken in range order.
template <LanguageModel Model, std::ranges::input_range Phrases>
double future_cost(const Model& model, const Phrases& remaining) {
  double cost = 0.0;
  for (const Phrase& p : remaining) cost += phrase_future_cost(model, p);
  return cost;
}

/// exp of the mean negative log-likelihood per predicted token, </s> included.
template <LanguageModel Model>
double perplexity(const Model& model, const std::vector<std::vector<WordId>>& sentences) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& sentence : sentences) {
    auto state = sentence_start_state(model);
    for (auto w : sentence) {
      require_in_vocabulary(model, w);
      nll -= model.logprob(w, state);
      state = model.advance(w, state);
    }
    nll -= model.logprob(special::kSentenceEnd, state);
    tokens += sentence.size() + 1;
  }
  return tokens == 0 ? 1.0 : std::exp(nll / static_cast<double>(tokens));
}

}  // namespace wordorder
