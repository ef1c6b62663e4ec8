#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wordorder/corpus.hpp"
#include "wordorder/error.hpp"
#include "wordorder/language_model.hpp"

namespace wordorder {

struct BeamConfig {
  std::size_t beam_width = 64;
  bool use_future_cost = true;
  bool score_eos = true;
  /// Identical remaining phrases give identical successors; expand only the
  /// lowest-indexed one.
  bool dedupe_identical_phrases = true;
};

/// A complete ordering of the bag: `order[n]` is the bag index placed n-th.
struct Ordering {
  std::vector<std::size_t> order;
  double score = 0.0;

  friend bool operator==(const Ordering&, const Ordering&) = default;
};

/// The shared ranking rule: higher key first, then the lexicographically
/// smaller index sequence.
inline bool ranks_before(double key_a, std::span<const std::size_t> order_a, double key_b,
                         std::span<const std::size_t> order_b) {
  if (key_a != key_b) return key_a > key_b;
  return std::lexicographical_compare(order_a.begin(), order_a.end(), order_b.begin(), order_b.end());
}

template <LanguageModel Model>
struct Hypothesis {
  std::vector<std::size_t> order;   // y
  std::vector<bool> remaining;      // R as a mask over bag indices
  double score = 0.0;               // s = f(x, y), plus log q(</s>) once complete when score_eos
  double key = 0.0;                 // pruning key s + g(R)
  typename Model::State state;      // h
};

namespace detail {

template <typename Hyp>
void keep_top(std::vector<Hyp>& beam, std::size_t k) {
  auto better = [](const Hyp& a, const Hyp& b) { return ranks_before(a.key, a.order, b.key, b.order); };
  if (beam.size() > k) {
    std::nth_element(beam.begin(), beam.begin() + static_cast<std::ptrdiff_t>(k), beam.end(), better);
    beam.resize(k);
  }
  std::sort(beam.begin(), beam.end(), better);
}

inline std::vector<std::size_t> duplicate_groups(std::span<const Phrase> phrases) {
  std::vector<std::size_t> group(phrases.size());
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    group[i] = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (phrases[j].word_ids == phrases[i].word_ids) {
        group[i] = group[j];
        break;
      }
    }
  }
  return group;
}

}  // namespace detail

/// Multi-beam search over phrase orderings. Beam j holds hypotheses that have
/// placed j tokens; expanding with phrase i scores each of its words in turn and
/// lands in beam j + |x_i|. Each beam keeps its top `beam_width` by
/// s + g(R) (or s alone). Returns the final beam ranked by score.
template <LanguageModel Model>
std::vector<Ordering> order(const Model& model, std::span<const Phrase> phrases, const BeamConfig& config,
                            std::vector<Hypothesis<Model>>* final_beam = nullptr) {
  if (phrases.empty()) throw ContractError("cannot order an empty phrase list");
  if (config.beam_width == 0) throw ConfigError("beam width must be at least 1");
  const std::size_t n = phrases.size();
  std::vector<double> phrase_cost(n);
  std::size_t total_tokens = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (phrases[i].word_ids.empty()) throw ContractError("empty phrase");
    for (auto w : phrases[i].word_ids) require_in_vocabulary(model, w);
    phrase_cost[i] = phrase_future_cost(model, phrases[i]);
    total_tokens += phrases[i].size();
  }
  const auto group = config.dedupe_identical_phrases ? detail::duplicate_groups(phrases)
                                                     : [n] {
                                                         std::vector<std::size_t> g(n);
                                                         std::iota(g.begin(), g.end(), std::size_t{0});
                                                         return g;
                                                       }();

  using Hyp = Hypothesis<Model>;
  const std::size_t k = config.beam_width;
  std::vector<std::vector<Hyp>> beams(total_tokens + 1);
  {
    Hyp root{{}, std::vector<bool>(n, true), 0.0, 0.0, sentence_start_state(model)};
    beams[0].push_back(std::move(root));
  }
  std::vector<bool> group_seen(n);
  for (std::size_t m = 0; m < total_tokens; ++m) {
    detail::keep_top(beams[m], k);
    for (const Hyp& hyp : beams[m]) {
      std::fill(group_seen.begin(), group_seen.end(), false);
      for (std::size_t i = 0; i < n; ++i) {
        if (!hyp.remaining[i] || group_seen[group[i]]) continue;
        group_seen[group[i]] = true;
        Hyp next{hyp.order, hyp.remaining, hyp.score, 0.0, hyp.state};
        for (auto w : phrases[i].word_ids) {
          next.score += model.logprob(w, next.state);
          next.state = model.advance(w, next.state);
        }
        next.order.push_back(i);
        next.remaining[i] = false;
        const std::size_t j = m + phrases[i].size();
        if (j == total_tokens && config.score_eos) next.score += model.logprob(special::kSentenceEnd, next.state);
        double g = 0.0;
        if (config.use_future_cost) {
          for (std::size_t r = 0; r < n; ++r) {
            if (next.remaining[r]) g += phrase_cost[r];
          }
        }
        next.key = next.score + g;
        beams[j].push_back(std::move(next));
        if (beams[j].size() >= 2 * k) detail::keep_top(beams[j], k);
      }
    }
    beams[m].clear();
    beams[m].shrink_to_fit();
  }
  auto& last = beams[total_tokens];
  detail::keep_top(last, k);
  std::vector<Ordering> result;
  result.reserve(last.size());
  for (const auto& hyp : last) result.push_back({hyp.order, hyp.score});
  if (final_beam) *final_beam = std::move(last);
  return result;
}

inline constexpr std::size_t kExhaustiveLimit = 9;

/// Scores all N! orderings with score_sequence (+ log q(</s>) when
/// `score_eos`); ties go to the lexicographically smaller ordering. Refuses
/// N > kExhaustiveLimit with ConfigError.
template <LanguageModel Model>
Ordering exhaustive_oracle(const Model& model, std::span<const Phrase> phrases, bool score_eos = true) {
  if (phrases.empty()) throw ContractError("cannot order an empty phrase list");
  if (phrases.size() > kExhaustiveLimit) {
    throw ConfigError("exhaustive search is limited to " + std::to_string(kExhaustiveLimit) + " phrases");
  }
  std::vector<std::size_t> perm(phrases.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Ordering best;
  bool have_best = false;
  std::vector<WordId> words;
  do {
    words.clear();
    for (auto i : perm) words.insert(words.end(), phrases[i].word_ids.begin(), phrases[i].word_ids.end());
    double score = score_sequence<Model>(model, words);
    if (score_eos) {
      auto state = sentence_start_state(model);
      for (auto w : words) state = model.advance(w, state);
      score += model.logprob(special::kSentenceEnd, state);
    }
    // Permutations arrive in lexicographic order, so only a strictly better score replaces.
    if (!have_best || score > best.score) {
      best = {perm, score};
      have_best = true;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// True when `final_score` <= s + g(R) at every prefix of `ordering` (phrase
/// boundaries, empty prefix included). A measurement, not a guarantee.
template <LanguageModel Model>
bool future_cost_bounds(const Model& model, std::span<const Phrase> phrases, const Ordering& ordering,
                        double final_score) {
  std::vector<bool> placed(phrases.size(), false);
  auto state = sentence_start_state(model);
  double s = 0.0;
  for (std::size_t step = 0;; ++step) {
    double g = 0.0;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      if (!placed[i]) g += phrase_future_cost(model, phrases[i]);
    }
    if (final_score > s + g) return false;
    if (step == ordering.order.size()) return true;
    const auto next = ordering.order[step];
    placed[next] = true;
    for (auto w : phrases[next].word_ids) {
      s += model.logprob(w, state);
      state = model.advance(w, state);
    }
  }
}

/// Surface tokens of `phrases` arranged by `ordering`, markers included.
std::vector<WordId> ordered_ids(std::span<const Phrase> phrases, const Ordering& ordering);

/// Turns a complete ordering of the instance's shuffled bag into surface text:
/// drops BNP markers and restores each UNK-class or numeric slot with an
/// unused original token of the same class. Candidates are kept in sentence
/// order and drawn with `stream_rng(seed, "unk:" + instance.id).below(count)`,
/// slot by slot from left to right. A slot with no candidate left keeps the
/// class surface form.
std::vector<std::string> finalize_output(const Ordering& ordering, const Instance& instance,
                                         const Vocabulary& vocab, std::uint64_t seed);

/// Reference surface text of an instance: its original tokens.
inline const std::vector<std::string>& reference_tokens(const Instance& instance) {
  return instance.original_tokens;
}

}  // namespace wordorder
