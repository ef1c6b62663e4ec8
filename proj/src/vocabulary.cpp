#include "wordorder/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <ostream>

#include "wordorder/error.hpp"
#include "wordorder/rng.hpp"

namespace wordorder {

namespace {

constexpr std::array<std::string_view, special::kCount> kSpecialSurfaces = {
    "<s>", "</s>", "<bnp>", "</bnp>", "<unk-cap>", "<unk>", "<num>"};

bool is_special_surface(std::string_view token) {
  return std::find(kSpecialSurfaces.begin(), kSpecialSurfaces.end(), token) != kSpecialSurfaces.end();
}

constexpr std::string_view kHeader = "#wordorder-vocab min_count=";

}  // namespace

std::span<const std::string_view> special_surfaces() { return kSpecialSurfaces; }

bool is_structural(WordId id) {
  return id == special::kSentenceStart || id == special::kSentenceEnd || id == special::kBnpStart ||
         id == special::kBnpEnd;
}

bool is_replacement_class(WordId id) {
  return id == special::kUnkCapitalized || id == special::kUnk || id == special::kNumeric;
}

bool contains_digit(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

Vocabulary::Vocabulary() {
  for (auto surface : kSpecialSurfaces) add(std::string(surface));
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<WordId>(id_to_token_.size());
  if (token_to_id_.emplace(token, id).second) id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, int min_count) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) {
      if (contains_digit(token) || is_special_surface(token)) continue;
      ++freq[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : freq) {
    if (count >= static_cast<std::size_t>(min_count)) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (auto& entry : kept) vocab.add(std::move(entry.first));
  return vocab;
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words, int min_count) {
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (const auto& w : words) {
    if (!is_special_surface(w)) vocab.add(w);
  }
  return vocab;
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::string joined;
  for (const auto& t : id_to_token_) {
    joined += t;
    joined += '\n';
  }
  return fnv1a64(joined);
}

void Vocabulary::write(std::ostream& out) const {
  out << kHeader << min_count_ << '\n';
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kHeader, 0) != 0) {
    throw ParseError(1, "missing vocabulary header");
  }
  int min_count = 0;
  try {
    min_count = std::stoi(line.substr(kHeader.size()));
  } catch (const std::exception&) {
    throw ParseError(1, "bad min_count in vocabulary header");
  }
  std::vector<std::string> tokens;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw ParseError(line_no, "empty token");
    tokens.push_back(line);
  }
  if (tokens.size() < special::kCount) throw ParseError(line_no, "vocabulary lacks reserved tokens");
  for (std::size_t i = 0; i < special::kCount; ++i) {
    if (tokens[i] != kSpecialSurfaces[i]) {
      throw ParseError(i + 2, "expected reserved token " + std::string(kSpecialSurfaces[i]));
    }
  }
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (std::size_t i = special::kCount; i < tokens.size(); ++i) {
    if (vocab.find(tokens[i])) throw ParseError(i + 2, "duplicate token " + tokens[i]);
    vocab.add(tokens[i]);
  }
  return vocab;
}

WordId replace_token(std::string_view token, const Vocabulary& vocab) {
  if (contains_digit(token)) return special::kNumeric;
  if (auto id = vocab.find(token); id && !is_structural(*id)) return *id;
  if (!token.empty() && std::isupper(static_cast<unsigned char>(token.front()))) {
    return special::kUnkCapitalized;
  }
  return special::kUnk;
}

}  // namespace wordorder
