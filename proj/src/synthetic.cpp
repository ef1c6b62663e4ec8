#include "wordorder/synthetic.hpp"

#include <array>
#include <span>
#include <string_view>

#include "wordorder/rng.hpp"

namespace wordorder {

namespace {

enum Category { kBos, kDet, kAdj, kNoun, kPron, kVerb, kPrep, kAdv, kConj, kComma, kStop, kCategories };

constexpr std::string_view kDets[] = {"the", "a", "this", "every", "some", "that", "no", "one"};
constexpr std::string_view kAdjs[] = {"old",    "red",   "small", "quiet",  "heavy", "bright", "cold",  "green",
                                      "tall",   "empty", "young", "silver", "broad", "narrow", "warm",  "dark",
                                      "gentle", "loud",  "round", "rough",  "sharp", "smooth", "stale", "thin",
                                      "wild",   "brave", "calm",  "dry",    "fresh", "pale"};
constexpr std::string_view kNouns[] = {
    "dog",    "cat",    "house",  "river",   "garden", "teacher", "child",   "window", "road",  "city",
    "letter", "table",  "market", "doctor",  "bridge", "train",   "farmer",  "song",   "horse", "ship",
    "forest", "key",    "lamp",   "village", "mirror", "bird",    "soldier", "coat",   "tower", "stone",
    "boat",   "wall",   "friend", "king",    "apple",  "box",     "chair",   "field",  "hill",  "island",
    "knife",  "lake",   "mouse",  "night",   "ocean",  "pencil",  "queen",   "rope",   "shoe",  "storm",
    "street", "sword",  "tree",   "valley",  "wagon",  "wheel",   "winter",  "wolf",   "book",  "clock"};
constexpr std::string_view kProns[] = {"he", "she", "they", "we", "it", "you"};
constexpr std::string_view kVerbs[] = {
    "saw",     "found",   "carried", "painted", "opened",  "followed", "watched", "built",  "lost",   "sold",
    "crossed", "visited", "cleaned", "moved",   "pulled",  "pushed",   "kept",    "broke",  "bought", "called",
    "chased",  "covered", "filled",  "helped",  "touched", "wanted",   "wrote",   "left",   "met",    "held",
    "heard",   "liked",   "loved",   "needed",  "noticed", "passed",   "reached", "showed", "took",   "used"};
constexpr std::string_view kPreps[] = {"in", "on", "near", "under", "behind", "with", "from", "across", "through",
                                       "beside"};
constexpr std::string_view kAdvs[] = {"slowly", "quickly", "often",   "never",  "again", "today",
                                      "later",  "soon",    "quietly", "gladly", "early", "twice"};
constexpr std::string_view kConjs[] = {"and", "but", "so"};
constexpr std::string_view kCommas[] = {","};
constexpr std::string_view kStops[] = {"."};

std::span<const std::string_view> lexicon(Category c) {
  switch (c) {
    case kDet: return kDets;
    case kAdj: return kAdjs;
    case kNoun: return kNouns;
    case kPron: return kProns;
    case kVerb: return kVerbs;
    case kPrep: return kPreps;
    case kAdv: return kAdvs;
    case kConj: return kConjs;
    case kComma: return kCommas;
    case kStop: return kStops;
    default: return {};
  }
}

using Row = std::array<double, kCategories>;

// P(next category | two previous categories). Rows only depend on the older
// category where it matters.
Row transition(Category prev2, Category prev1) {
  Row r{};
  switch (prev1) {
    case kBos:
      r[kDet] = 0.6, r[kPron] = 0.3, r[kAdv] = 0.1;
      break;
    case kDet:
      r[kAdj] = 0.4, r[kNoun] = 0.6;
      break;
    case kAdj:
      if (prev2 == kAdj) {
        r[kNoun] = 1.0;
      } else {
        r[kAdj] = 0.25, r[kNoun] = 0.75;
      }
      break;
    case kNoun:
      if (prev2 == kAdj) {
        r[kVerb] = 0.45, r[kPrep] = 0.2, r[kStop] = 0.25, r[kComma] = 0.1;
      } else {
        r[kVerb] = 0.35, r[kPrep] = 0.3, r[kStop] = 0.2, r[kComma] = 0.1, r[kAdv] = 0.05;
      }
      break;
    case kPron:
      if (prev2 == kBos || prev2 == kConj || prev2 == kComma) {
        r[kVerb] = 0.85, r[kAdv] = 0.15;
      } else {
        r[kStop] = 0.5, r[kPrep] = 0.2, r[kAdv] = 0.2, r[kComma] = 0.1;
      }
      break;
    case kVerb:
      r[kDet] = 0.55, r[kPron] = 0.15, r[kPrep] = 0.15, r[kAdv] = 0.1, r[kStop] = 0.05;
      break;
    case kPrep:
      r[kDet] = 0.85, r[kPron] = 0.15;
      break;
    case kAdv:
      if (prev2 == kVerb) {
        r[kStop] = 0.6, r[kPrep] = 0.3, r[kComma] = 0.1;
      } else if (prev2 == kBos) {
        r[kComma] = 0.5, r[kPron] = 0.3, r[kDet] = 0.2;
      } else {
        r[kVerb] = 0.6, r[kStop] = 0.4;
      }
      break;
    case kConj:
      r[kDet] = 0.6, r[kPron] = 0.4;
      break;
    case kComma:
      if (prev2 == kAdv) {
        r[kDet] = 0.5, r[kPron] = 0.5;
      } else {
        r[kConj] = 0.7, r[kDet] = 0.3;
      }
      break;
    default:
      break;
  }
  return r;
}

Category sample(const Row& row, SplitMix64& rng) {
  double total = 0.0;
  for (double p : row) total += p;
  double u = rng.unit() * total;
  for (int c = 0; c < kCategories; ++c) {
    if (row[c] <= 0.0) continue;
    if (u < row[c]) return static_cast<Category>(c);
    u -= row[c];
  }
  for (int c = kCategories - 1; c >= 0; --c) {
    if (row[c] > 0.0) return static_cast<Category>(c);
  }
  return kStop;
}

// Zipf-like choice within a category: weight 1 / (rank + 1).
std::string_view pick_word(Category c, SplitMix64& rng) {
  const auto words = lexicon(c);
  double total = 0.0;
  for (std::size_t k = 0; k < words.size(); ++k) total += 1.0 / static_cast<double>(k + 1);
  double u = rng.unit() * total;
  for (std::size_t k = 0; k < words.size(); ++k) {
    const double w = 1.0 / static_cast<double>(k + 1);
    if (u < w) return words[k];
    u -= w;
  }
  return words.back();
}

SyntheticSentence generate_sentence(SplitMix64& rng, std::size_t max_length) {
  SyntheticSentence s;
  std::vector<Category> cats;
  Category prev2 = kBos;
  Category prev1 = kBos;
  while (true) {
    Category next = s.tokens.size() + 1 >= max_length ? kStop : sample(transition(prev2, prev1), rng);
    // A noun phrase in progress must reach its noun before the forced stop.
    if (next == kStop && (prev1 == kDet || prev1 == kAdj)) next = kNoun;
    if (next == kStop && (prev1 == kPrep || prev1 == kConj || prev1 == kComma)) next = kPron;
    s.tokens.emplace_back(pick_word(next, rng));
    cats.push_back(next);
    if (next == kStop) break;
    prev2 = prev1;
    prev1 = next;
  }
  for (std::size_t i = 0; i < cats.size();) {
    if (cats[i] == kPron) {
      s.bnp_spans.push_back({i, i + 1});
      ++i;
    } else if (cats[i] == kDet) {
      std::size_t j = i + 1;
      while (j < cats.size() && cats[j] == kAdj) ++j;
      while (j < cats.size() && cats[j] == kNoun) ++j;
      s.bnp_spans.push_back({i, j});
      i = j;
    } else {
      ++i;
    }
  }
  return s;
}

}  // namespace

std::vector<SyntheticSentence> generate_synthetic(const SyntheticConfig& config) {
  SplitMix64 rng = stream_rng(config.seed, "synthetic");
  std::vector<SyntheticSentence> out;
  std::size_t tokens = 0;
  while (tokens < config.target_tokens) {
    out.push_back(generate_sentence(rng, config.max_length));
    tokens += out.back().tokens.size();
  }
  return out;
}

std::size_t synthetic_lexicon_size() {
  std::size_t n = 0;
  for (int c = kDet; c < kCategories; ++c) n += lexicon(static_cast<Category>(c)).size();
  return n;
}

}  // namespace wordorder
