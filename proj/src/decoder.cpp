#include "wordorder/decoder.hpp"

#include "wordorder/rng.hpp"

namespace wordorder {

std::vector<WordId> ordered_ids(std::span<const Phrase> phrases, const Ordering& ordering) {
  std::vector<WordId> ids;
  for (auto i : ordering.order) {
    const auto& w = phrases[i].word_ids;
    ids.insert(ids.end(), w.begin(), w.end());
  }
  return ids;
}

std::vector<std::string> finalize_output(const Ordering& ordering, const Instance& instance,
                                         const Vocabulary& vocab, std::uint64_t seed) {
  const auto bag = instance.shuffled_phrases();
  const auto ids = ordered_ids(bag, ordering);

  // Gold phrases without markers line up one-to-one with the original tokens.
  std::vector<WordId> original_ids;
  for (const auto& p : instance.gold_phrases) {
    for (auto w : p.word_ids) {
      if (w != special::kBnpStart && w != special::kBnpEnd) original_ids.push_back(w);
    }
  }
  std::vector<bool> used(instance.original_tokens.size(), false);
  auto rng = stream_rng(seed, "unk:" + instance.id);

  std::vector<std::string> out;
  out.reserve(ids.size());
  std::vector<std::size_t> candidates;
  for (auto w : ids) {
    if (w == special::kBnpStart || w == special::kBnpEnd) continue;
    if (!is_replacement_class(w)) {
      out.push_back(vocab.token(w));
      continue;
    }
    candidates.clear();
    for (std::size_t k = 0; k < original_ids.size() && k < instance.original_tokens.size(); ++k) {
      if (original_ids[k] == w && !used[k]) candidates.push_back(k);
    }
    if (candidates.empty()) {
      out.push_back(vocab.token(w));
      continue;
    }
    const auto pick = candidates[rng.below(candidates.size())];
    used[pick] = true;
    out.push_back(instance.original_tokens[pick]);
  }
  return out;
}

}  // namespace wordorder
