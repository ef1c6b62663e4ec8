#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wordorder/corpus.hpp"

namespace wordorder {

/// Sentences from a fixed class-based trigram source. Each word belongs to exactly
/// one category; base noun phrases are the DET ADJ* NOUN runs and lone pronouns.
struct SyntheticSentence {
  std::vector<std::string> tokens;
  std::vector<TokenSpan> bnp_spans;
};

struct SyntheticConfig {
  std::size_t target_tokens = 50000;
  std::uint64_t seed = 7;
  std::size_t max_length = 30;
};

/// Generates sentences until at least `target_tokens` tokens exist.
std::vector<SyntheticSentence> generate_synthetic(const SyntheticConfig& config);

/// Number of distinct surface words the source can emit.
std::size_t synthetic_lexicon_size();

}  // namespace wordorder
