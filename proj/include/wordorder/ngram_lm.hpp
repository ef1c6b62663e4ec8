#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wordorder/vocabulary.hpp"

namespace wordorder {

inline constexpr std::size_t kMaxNGramOrder = 8;

/// Raw (or adjusted) counts for every k-gram, 1 <= k <= order.
class NGramCounts {
 public:
  using Table = std::map<std::vector<WordId>, std::uint64_t>;

  explicit NGramCounts(std::size_t order);

  std::size_t order() const { return tables_.size(); }
  const Table& table(std::size_t k) const { return tables_.at(k - 1); }
  std::uint64_t count(std::span<const WordId> ngram) const;
  void add(std::span<const WordId> ngram, std::uint64_t n = 1);
  void merge(const NGramCounts& other);
  /// Number of distinct k-grams whose count is exactly `c`.
  std::uint64_t count_of_counts(std::size_t k, std::uint64_t c) const;
  bool empty() const;

  friend bool operator==(const NGramCounts&, const NGramCounts&) = default;

 private:
  std::vector<Table> tables_;
};

/// Counts every k-gram of `<s> sentence </s>`. Throws ConfigError for order 0
/// or order above kMaxNGramOrder.
NGramCounts count_ngrams(const std::vector<std::vector<WordId>>& sentences, std::size_t order);

/// Kneser-Ney adjusted counts: the top order keeps raw counts, as do lower-order
/// n-grams starting with <s>; every other lower-order n-gram gets the number of
/// distinct words seen to its left.
NGramCounts adjust_counts(const NGramCounts& raw);

/// Modified Kneser-Ney discounts for one order.
struct Discounts {
  double d1 = 0.5;
  double d2 = 0.5;
  double d3plus = 0.5;
  bool fallback = false;

  double for_count(std::uint64_t c) const { return c == 0 ? 0.0 : c == 1 ? d1 : c == 2 ? d2 : d3plus; }
};

/// D_k = k - (k+1) Y n_{k+1}/n_k with Y = n1/(n1 + 2 n2). Falls back to a flat
/// 0.5 when n1, n2 or n3 is zero, or when some D_k lands outside (0, k].
Discounts estimate_discounts(std::uint64_t n1, std::uint64_t n2, std::uint64_t n3, std::uint64_t n4);

struct EstimateOptions {
  /// Drop order >= 2 n-grams with adjusted count 1 unless a longer kept n-gram
  /// needs them; their mass moves into the context's backoff.
  bool prune_singletons = false;
};

/// Interpolated modified Kneser-Ney model stored as backoff tables (the ARPA
/// representation): every stored n-gram carries its interpolated probability
/// and, as a context, its backoff weight. Natural log throughout.
class KneserNeyModel {
 public:
  /// Most recent min(order-1, seen) words, oldest first.
  struct State {
    std::array<WordId, kMaxNGramOrder - 1> words{};
    std::uint8_t size = 0;

    std::span<const WordId> context() const { return {words.data(), size}; }
    friend bool operator==(const State& a, const State& b) {
      return a.size == b.size && std::equal(a.words.begin(), a.words.begin() + a.size, b.words.begin());
    }
  };

  static KneserNeyModel estimate(const NGramCounts& raw, std::size_t vocab_size, const EstimateOptions& options = {});

  /// Every vocabulary word must appear as a unigram and every unigram must be in
  /// `vocab` (VocabularyMismatchError). Grammar problems raise ParseError.
  static KneserNeyModel from_arpa(std::string_view text, const Vocabulary& vocab);
  std::string to_arpa(const Vocabulary& vocab) const;

  State init_state() const { return {}; }
  State advance(WordId word, const State& state) const;
  double logprob(WordId word, const State& state) const;
  double unigram_logprob(WordId word) const;
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t order() const { return order_; }

  /// Per order, index 0 = unigrams. Empty for models loaded from ARPA.
  const std::vector<Discounts>& discounts() const { return discounts_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<double> stored_logprob(std::span<const WordId> ngram) const;
  std::optional<double> stored_backoff(std::span<const WordId> context) const;
  /// Counts of stored n-grams per order.
  std::vector<std::size_t> ngram_counts() const;
  /// Visits stored n-grams in order, then id sequence.
  void for_each_ngram(
      const std::function<void(std::span<const WordId> ngram, double logprob, double backoff)>& visit) const;

 private:
  struct Node {
    WordId word = 0;
    std::uint32_t parent = 0;
    std::uint32_t depth = 0;
    double logprob = 0.0;  // NaN when the path exists only as a suffix
    double backoff = 0.0;
  };

  KneserNeyModel(std::size_t order, std::size_t vocab_size);

  std::optional<std::uint32_t> child(std::uint32_t parent, WordId word) const;
  std::uint32_t insert(std::span<const WordId> ngram);
  std::optional<std::uint32_t> find_node(std::span<const WordId> ngram) const;
  std::vector<WordId> words_of(std::uint32_t node) const;

  std::size_t order_ = 0;
  std::size_t vocab_size_ = 0;
  // Node paths spell n-grams last word first; node w+1 is the unigram w.
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> children_;
  std::vector<Discounts> discounts_;
  std::vector<std::string> warnings_;
};

}  // namespace wordorder
