#include <algorithm>
#include <cmath>
#include <numeric>

#include "../support/test_support.hpp"
#include "doctest.h"
#include "wordorder/decoder.hpp"
#include "wordorder/error.hpp"
#include "wordorder/language_model.hpp"

using namespace wordorder;
using namespace wordorder::testing;

namespace {

const ToyModel& bigram() {
  static const ToyModel m = toy_model(2);
  return m;
}

// Plain greedy reference: extend with the phrase of best key, ties to the lowest index.
Ordering greedy_reference(const KneserNeyModel& model, std::span<const Phrase> bag, bool use_g) {
  std::vector<bool> used(bag.size(), false);
  Ordering out;
  auto state = sentence_start_state(model);
  for (std::size_t step = 0; step < bag.size(); ++step) {
    double best_key = -INFINITY;
    std::size_t best = bag.size();
    double best_score = 0.0;
    for (std::size_t i = 0; i < bag.size(); ++i) {
      if (used[i]) continue;
      double s = out.score;
      auto st = state;
      for (auto w : bag[i].word_ids) {
        s += model.logprob(w, st);
        st = model.advance(w, st);
      }
      if (step + 1 == bag.size()) s += model.logprob(special::kSentenceEnd, st);
      double g = 0.0;
      for (std::size_t r = 0; r < bag.size(); ++r) {
        if (!used[r] && r != i && use_g) g += phrase_future_cost(model, bag[r]);
      }
      if (best == bag.size() || s + g > best_key) {
        best_key = s + g;
        best = i;
        best_score = s;
      }
    }
    used[best] = true;
    for (auto w : bag[best].word_ids) state = model.advance(w, state);
    out.order.push_back(best);
    out.score = best_score;
  }
  return out;
}

std::vector<Phrase> random_bnp_bag(SplitMix64& rng, const Vocabulary& vocab, std::size_t n) {
  auto bag = random_bag(rng, vocab, n);
  for (auto& p : bag) {
    if (rng.below(3) == 0) {
      const auto extra = static_cast<WordId>(special::kCount + rng.below(vocab.size() - special::kCount));
      p.word_ids = {special::kBnpStart, p.word_ids[0], extra, special::kBnpEnd};
      p.is_bnp = true;
    }
  }
  return bag;
}

}  // namespace

TEST_CASE("argument checks") {
  const auto& m = bigram().model;
  BeamConfig config;
  CHECK_THROWS_AS(order(m, std::span<const Phrase>{}, config), ContractError);
  const std::vector<Phrase> one{{{7}, false}};
  config.beam_width = 0;
  CHECK_THROWS_AS(order(m, one, config), ConfigError);
  const std::vector<Phrase> bad{{{static_cast<WordId>(bigram().vocab.size())}, false}};
  CHECK_THROWS_AS(order(m, bad, BeamConfig{}), ContractError);
  std::vector<Phrase> ten(10, Phrase{{7}, false});
  CHECK_THROWS_AS(exhaustive_oracle(m, ten), ConfigError);
}

TEST_CASE("single phrase") {
  const std::vector<Phrase> one{{{7}, false}};
  const auto best = order(bigram().model, one, BeamConfig{}).front();
  CHECK(best.order == std::vector<std::size_t>{0});
  const std::vector<WordId> ids{7};
  CHECK(best.score == score_sequence(bigram().model, ids) +
                          bigram().model.logprob(special::kSentenceEnd,
                                                 bigram().model.advance(7, sentence_start_state(bigram().model))));
}

TEST_CASE("beam of one is greedy") {
  SplitMix64 rng(31);
  for (int t = 0; t < 100; ++t) {
    const auto bag = random_bag(rng, bigram().vocab, 2 + rng.below(8));
    for (bool g : {false, true}) {
      BeamConfig config;
      config.beam_width = 1;
      config.use_future_cost = g;
      config.dedupe_identical_phrases = false;
      const auto beam = order(bigram().model, bag, config).front();
      const auto ref = greedy_reference(bigram().model, bag, g);
      CHECK(beam.order == ref.order);
      CHECK(beam.score == ref.score);
    }
  }
}

TEST_CASE("unbounded beam equals exhaustive search with multi-token phrases") {
  SplitMix64 rng(41);
  for (int t = 0; t < 60; ++t) {
    const auto bag = random_bnp_bag(rng, bigram().vocab, 1 + rng.below(6));
    for (bool eos : {false, true}) {
      BeamConfig config;
      config.beam_width = 100000;
      config.score_eos = eos;
      const auto beam = order(bigram().model, bag, config).front();
      const auto exact = exhaustive_oracle(bigram().model, bag, eos);
      CHECK(beam.order == exact.order);
      CHECK(beam.score == exact.score);
    }
  }
}

TEST_CASE("beam search never beats exhaustive search") {
  SplitMix64 rng(43);
  for (int t = 0; t < 60; ++t) {
    const auto bag = random_bag(rng, bigram().vocab, 3 + rng.below(5));
    const auto exact = exhaustive_oracle(bigram().model, bag);
    for (std::size_t k : {1, 3, 10}) {
      BeamConfig config;
      config.beam_width = k;
      CHECK(order(bigram().model, bag, config).front().score <= exact.score);
    }
  }
}

TEST_CASE("future cost only changes pruning") {
  SplitMix64 rng(47);
  for (int t = 0; t < 40; ++t) {
    const auto bag = random_bag(rng, bigram().vocab, 2 + rng.below(5));
    BeamConfig on;
    on.beam_width = 5040;
    BeamConfig off = on;
    off.use_future_cost = false;
    CHECK(order(bigram().model, bag, on).front() == order(bigram().model, bag, off).front());
  }
}

TEST_CASE("deduplication does not change the result without pruning") {
  const std::vector<Phrase> bag{{{8}, false}, {{7}, false}, {{8}, false}, {{9}, false}, {{7}, false}};
  BeamConfig with;
  with.beam_width = 1000;
  BeamConfig without = with;
  without.dedupe_identical_phrases = false;
  CHECK(order(bigram().model, bag, with).front() == order(bigram().model, bag, without).front());
  CHECK(order(bigram().model, bag, with).front() == exhaustive_oracle(bigram().model, bag));
}

TEST_CASE("final beam is ranked and complete") {
  SplitMix64 rng(53);
  const auto bag = random_bag(rng, bigram().vocab, 6);
  BeamConfig config;
  config.beam_width = 8;
  std::vector<Hypothesis<KneserNeyModel>> last;
  const auto ranked = order(bigram().model, bag, config, &last);
  REQUIRE(ranked.size() == last.size());
  CHECK(ranked.size() <= 8);
  for (std::size_t i = 0; i + 1 < ranked.size(); ++i) CHECK(ranked[i].score >= ranked[i + 1].score);
  for (const auto& o : ranked) {
    auto sorted = o.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("with a unigram model every ordering scores the same") {
  const auto uni = toy_model(1);
  SplitMix64 rng(59);
  for (int t = 0; t < 30; ++t) {
    const auto bag = random_bag(rng, uni.vocab, 2 + rng.below(6));
    BeamConfig config;
    config.beam_width = 1 + rng.below(4);
    const auto best = order(uni.model, bag, config).front();
    auto sorted = best.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
    double expected = future_cost(uni.model, bag) + uni.model.unigram_logprob(special::kSentenceEnd);
    CHECK(best.score == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("tie-break prefers the smaller index sequence") {
  const std::vector<std::size_t> a{0, 2, 1};
  const std::vector<std::size_t> b{1, 0, 2};
  CHECK(ranks_before(-1.0, a, -1.0, b));
  CHECK_FALSE(ranks_before(-1.0, b, -1.0, a));
  CHECK(ranks_before(-0.5, b, -1.0, a));
}

TEST_CASE("finalized output strips markers and restores classes") {
  auto vocab = Vocabulary::build({{"the", "dog", "saw", "and", "cats", "."}}, 1);
  const std::vector<std::string> tokens{"Rex", "saw", "the", "zebra", "and", "12", "cats", "."};
  const std::vector<TokenSpan> spans{{2, 4}, {5, 7}};
  const auto inst = make_instance("u1", tokens, spans, Variant::kWordsBnps, vocab, 3);
  Ordering gold{inst.gold_ordering(), 0.0};
  CHECK(finalize_output(gold, inst, vocab, 3) == tokens);

  // Two plain UNKs swap places in the bag; each must come back as an unused original.
  const std::vector<std::string> two{"foo", "saw", "bar"};
  const auto inst2 = make_instance("u2", two, {}, Variant::kWords, vocab, 3);
  std::vector<std::size_t> order(3);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto out = finalize_output({order, 0.0}, inst2, vocab, 3);
  auto sorted_out = out;
  auto sorted_in = two;
  std::sort(sorted_out.begin(), sorted_out.end());
  std::sort(sorted_in.begin(), sorted_in.end());
  CHECK(sorted_out == sorted_in);
  CHECK(finalize_output({order, 0.0}, inst2, vocab, 3) == out);
}

TEST_CASE("returned scores can be recomputed from scratch") {
  const auto tri = toy_model(3);
  SplitMix64 rng(61);
  for (int t = 0; t < 40; ++t) {
    const auto bag = random_bnp_bag(rng, tri.vocab, 2 + rng.below(8));
    for (bool eos : {false, true}) {
      BeamConfig config;
      config.beam_width = 1 + rng.below(6);
      config.score_eos = eos;
      for (const auto& o : order(tri.model, bag, config)) {
        const auto ids = ordered_ids(bag, o);
        double f = score_sequence(tri.model, ids);
        if (eos) {
          auto st = sentence_start_state(tri.model);
          for (auto w : ids) st = tri.model.advance(w, st);
          f += tri.model.logprob(special::kSentenceEnd, st);
        }
        CHECK(o.score == doctest::Approx(f).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("bnp variant without spans behaves like the words variant") {
  const auto& v = bigram().vocab;
  const std::vector<std::string> tokens{"the", "cat", "sat", "on", "a", "mat", "."};
  const auto words = make_instance("z1", tokens, {}, Variant::kWords, v, 9);
  const auto bnps = make_instance("z1", tokens, {}, Variant::kWordsBnps, v, 9);
  CHECK(words.shuffle == bnps.shuffle);
  for (std::size_t k : {1, 4, 64}) {
    BeamConfig config;
    config.beam_width = k;
    const auto a = order(bigram().model, words.shuffled_phrases(), config).front();
    const auto b = order(bigram().model, bnps.shuffled_phrases(), config).front();
    CHECK(a == b);
    CHECK(finalize_output(a, words, v, 3) == finalize_output(b, bnps, v, 3));
  }
}

TEST_CASE("future cost bound diagnostic") {
  const auto uni = toy_model(1);
  const std::vector<Phrase> bag{{{7}, false}, {{8}, false}, {{9}, false}};
  const auto best = order(uni.model, bag, BeamConfig{}).front();
  // Under a unigram model s + g is constant, and </s> only lowers the final score.
  CHECK(future_cost_bounds(uni.model, bag, best, best.score));
  CHECK_FALSE(future_cost_bounds(uni.model, bag, best, 1.0));
}
