#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wordorder/vocabulary.hpp"

namespace wordorder {

enum class Variant { kWords, kWordsBnps };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

/// Half-open, 0-based token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

/// A single word, or a base noun phrase wrapped in BNP markers.
struct Phrase {
  std::vector<WordId> word_ids;
  bool is_bnp = false;

  std::size_t size() const { return word_ids.size(); }
  friend auto operator<=>(const Phrase&, const Phrase&) = default;
};

/// One linearization problem. `shuffle[k]` is the gold index of the phrase
/// found at position k of the shuffled bag.
struct Instance {
  std::string id;
  Variant variant = Variant::kWords;
  std::vector<std::string> original_tokens;
  std::vector<TokenSpan> spans;
  std::vector<Phrase> gold_phrases;
  std::vector<std::size_t> shuffle;

  /// The bag handed to the decoder.
  std::vector<Phrase> shuffled_phrases() const;
  /// Inverse of `shuffle`: the bag ordering that reproduces the gold sentence.
  std::vector<std::size_t> gold_ordering() const;
  /// M, total tokens across phrases, BNP markers included.
  std::size_t token_count() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Splits the sentence into phrases. Under Words every token becomes its own
/// phrase and `spans` must be empty; under WordsBnps each span becomes one
/// marker-wrapped phrase. Throws MalformedSpanError.
std::vector<Phrase> build_phrases(std::span<const std::string> tokens, std::span<const TokenSpan> spans,
                                  Variant variant, const Vocabulary& vocab);

/// The id sequence the language models are trained on: phrases flattened in order.
std::vector<WordId> encode_sentence(std::span<const std::string> tokens, std::span<const TokenSpan> spans,
                                    Variant variant, const Vocabulary& vocab);

/// Builds phrases and shuffles them with Fisher-Yates over
/// `stream_rng(seed, id)`. Deterministic in all arguments.
Instance make_instance(std::string id, std::span<const std::string> tokens, std::span<const TokenSpan> spans,
                       Variant variant, const Vocabulary& vocab, std::uint64_t seed);

/// Instance files are JSON lines with keys id, variant, tokens, spans, phrases, shuffle.
std::string to_json_line(const Instance& instance);
Instance instance_from_json(std::string_view line);

/// Throws VocabularyMismatchError when the stored phrase ids disagree with
/// what `vocab` assigns to the stored tokens.
void check_against_vocabulary(const Instance& instance, const Vocabulary& vocab);

std::vector<std::string> split_tokens(std::string_view line);

/// One whitespace-tokenized sentence per line; blank lines give empty sentences.
std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path);

/// Span lines hold space-separated `start:end` pairs, 1-based and inclusive.
std::vector<TokenSpan> parse_span_line(std::string_view line);
std::vector<std::vector<TokenSpan>> read_spans(const std::filesystem::path& path);
std::string format_span_line(std::span<const TokenSpan> spans);

std::vector<Instance> read_instances(const std::filesystem::path& path);

}  // namespace wordorder
