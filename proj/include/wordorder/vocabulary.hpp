#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wordorder {

using WordId = std::uint32_t;

/// Reserved ids. They occupy 0..6 in every vocabulary, in this order.
namespace special {
inline constexpr WordId kSentenceStart = 0;
inline constexpr WordId kSentenceEnd = 1;
inline constexpr WordId kBnpStart = 2;
inline constexpr WordId kBnpEnd = 3;
inline constexpr WordId kUnkCapitalized = 4;
inline constexpr WordId kUnk = 5;
inline constexpr WordId kNumeric = 6;
inline constexpr std::size_t kCount = 7;
}  // namespace special

/// Surface forms of the reserved ids, indexed by id.
std::span<const std::string_view> special_surfaces();

bool is_structural(WordId id);       // sentence or BNP boundary marker
bool is_replacement_class(WordId id);  // one of the two UNK classes or the numeric symbol

bool contains_digit(std::string_view token);

class Vocabulary {
 public:
  /// Specials only.
  Vocabulary();

  /// Counts tokens (numeric tokens and special surfaces excluded) and keeps
  /// those seen at least `min_count` times, ordered by descending frequency
  /// and then byte order.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, int min_count);

  /// Specials followed by `words` in the given order. Duplicates and special
  /// surfaces in `words` are skipped.
  static Vocabulary from_words(std::span<const std::string> words, int min_count = 1);

  std::optional<WordId> find(std::string_view token) const;
  const std::string& token(WordId id) const { return id_to_token_.at(id); }
  std::size_t size() const { return id_to_token_.size(); }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// FNV-1a over the newline-joined token list; identifies a vocabulary in model files.
  std::uint64_t fingerprint() const;

  /// Text format: a header line `#wordorder-vocab min_count=N`, then one token per line in id order.
  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.min_count_ == b.min_count_ && a.id_to_token_ == b.id_to_token_;
  }

 private:
  void add(std::string token);

  std::unordered_map<std::string, WordId> token_to_id_;
  std::vector<std::string> id_to_token_;
  int min_count_ = 1;
};

/// Maps a surface token to its id: numeric-containing tokens go to the numeric
/// symbol, in-vocabulary tokens to themselves, unknown tokens starting with an
/// upper-case ASCII letter to the capitalized UNK, everything else to the plain UNK.
WordId replace_token(std::string_view token, const Vocabulary& vocab);

}  // namespace wordorder
