#include "wordorder/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "wordorder/error.hpp"
#include "wordorder/file_util.hpp"
#include "wordorder/rng.hpp"

namespace wordorder {

using nlohmann::json;

std::string_view to_string(Variant v) { return v == Variant::kWords ? "words" : "words-bnps"; }

Variant parse_variant(std::string_view text) {
  if (text == "words") return Variant::kWords;
  if (text == "words-bnps") return Variant::kWordsBnps;
  throw ConfigError("unknown variant '" + std::string(text) + "' (expected words or words-bnps)");
}

std::vector<Phrase> Instance::shuffled_phrases() const {
  std::vector<Phrase> bag;
  bag.reserve(shuffle.size());
  for (auto gold_index : shuffle) bag.push_back(gold_phrases.at(gold_index));
  return bag;
}

std::vector<std::size_t> Instance::gold_ordering() const {
  std::vector<std::size_t> order(shuffle.size());
  for (std::size_t k = 0; k < shuffle.size(); ++k) order[shuffle[k]] = k;
  return order;
}

std::size_t Instance::token_count() const {
  std::size_t m = 0;
  for (const auto& p : gold_phrases) m += p.size();
  return m;
}

namespace {

void validate_spans(std::span<const TokenSpan> spans, std::size_t n_tokens) {
  std::vector<TokenSpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t covered = 0;
  for (const auto& s : sorted) {
    if (s.begin >= s.end) throw MalformedSpanError("empty span");
    if (s.end > n_tokens) {
      throw MalformedSpanError("span [" + std::to_string(s.begin) + "," + std::to_string(s.end) +
                               ") exceeds sentence length " + std::to_string(n_tokens));
    }
    if (s.begin < covered) throw MalformedSpanError("overlapping spans");
    covered = s.end;
  }
}

}  // namespace

std::vector<Phrase> build_phrases(std::span<const std::string> tokens, std::span<const TokenSpan> spans,
                                  Variant variant, const Vocabulary& vocab) {
  if (variant == Variant::kWords && !spans.empty()) {
    throw MalformedSpanError("BNP spans given for the words variant");
  }
  validate_spans(spans, tokens.size());
  std::vector<TokenSpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<Phrase> phrases;
  auto next_span = sorted.begin();
  for (std::size_t i = 0; i < tokens.size();) {
    if (next_span != sorted.end() && next_span->begin == i) {
      Phrase bnp{{special::kBnpStart}, true};
      for (std::size_t k = next_span->begin; k < next_span->end; ++k) {
        bnp.word_ids.push_back(replace_token(tokens[k], vocab));
      }
      bnp.word_ids.push_back(special::kBnpEnd);
      phrases.push_back(std::move(bnp));
      i = next_span->end;
      ++next_span;
    } else {
      phrases.push_back(Phrase{{replace_token(tokens[i], vocab)}, false});
      ++i;
    }
  }
  return phrases;
}

std::vector<WordId> encode_sentence(std::span<const std::string> tokens, std::span<const TokenSpan> spans,
                                    Variant variant, const Vocabulary& vocab) {
  std::vector<WordId> ids;
  for (const auto& p : build_phrases(tokens, spans, variant, vocab)) {
    ids.insert(ids.end(), p.word_ids.begin(), p.word_ids.end());
  }
  return ids;
}

Instance make_instance(std::string id, std::span<const std::string> tokens, std::span<const TokenSpan> spans,
                       Variant variant, const Vocabulary& vocab, std::uint64_t seed) {
  Instance inst;
  inst.gold_phrases = build_phrases(tokens, spans, variant, vocab);
  inst.id = std::move(id);
  inst.variant = variant;
  inst.original_tokens.assign(tokens.begin(), tokens.end());
  inst.spans.assign(spans.begin(), spans.end());
  std::sort(inst.spans.begin(), inst.spans.end());
  inst.shuffle.resize(inst.gold_phrases.size());
  std::iota(inst.shuffle.begin(), inst.shuffle.end(), std::size_t{0});
  auto rng = stream_rng(seed, inst.id);
  fisher_yates(std::span<std::size_t>(inst.shuffle), rng);
  return inst;
}

std::string to_json_line(const Instance& instance) {
  json spans = json::array();
  for (const auto& s : instance.spans) spans.push_back({s.begin, s.end});
  json phrases = json::array();
  for (const auto& p : instance.gold_phrases) phrases.push_back(p.word_ids);
  json record = {
      {"id", instance.id},
      {"variant", std::string(to_string(instance.variant))},
      {"tokens", instance.original_tokens},
      {"spans", spans},
      {"phrases", phrases},
      {"shuffle", instance.shuffle},
  };
  return record.dump();
}

Instance instance_from_json(std::string_view line) {
  Instance inst;
  try {
    const json record = json::parse(line);
    inst.id = record.at("id").get<std::string>();
    inst.variant = parse_variant(record.at("variant").get<std::string>());
    inst.original_tokens = record.at("tokens").get<std::vector<std::string>>();
    for (const auto& s : record.at("spans")) {
      inst.spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    }
    for (const auto& p : record.at("phrases")) {
      Phrase phrase{p.get<std::vector<WordId>>(), false};
      phrase.is_bnp = !phrase.word_ids.empty() && phrase.word_ids.front() == special::kBnpStart;
      inst.gold_phrases.push_back(std::move(phrase));
    }
    inst.shuffle = record.at("shuffle").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad instance record: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  std::vector<bool> seen(inst.shuffle.size(), false);
  if (inst.shuffle.size() != inst.gold_phrases.size()) throw DataError("instance " + inst.id + ": shuffle size");
  for (auto k : inst.shuffle) {
    if (k >= seen.size() || seen[k]) throw DataError("instance " + inst.id + ": shuffle is not a permutation");
    seen[k] = true;
  }
  return inst;
}

void check_against_vocabulary(const Instance& instance, const Vocabulary& vocab) {
  std::vector<Phrase> expected;
  try {
    expected = build_phrases(instance.original_tokens, instance.spans, instance.variant, vocab);
  } catch (const MalformedSpanError& e) {
    throw VocabularyMismatchError("instance " + instance.id + ": " + e.what());
  }
  if (expected != instance.gold_phrases) {
    throw VocabularyMismatchError("instance " + instance.id +
                                  " was prepared with a different vocabulary than the model");
  }
}

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& line : read_lines(path)) corpus.push_back(split_tokens(line));
  return corpus;
}

std::vector<TokenSpan> parse_span_line(std::string_view line) {
  std::vector<TokenSpan> spans;
  for (const auto& field : split_tokens(line)) {
    const auto colon = field.find(':');
    std::size_t first = 0;
    std::size_t last = 0;
    const char* begin = field.data();
    const char* end = field.data() + field.size();
    if (colon == std::string::npos ||
        std::from_chars(begin, begin + colon, first).ptr != begin + colon ||
        std::from_chars(begin + colon + 1, end, last).ptr != end || first < 1 || last < first) {
      throw MalformedSpanError("bad span '" + field + "' (expected start:end, 1-based inclusive)");
    }
    spans.push_back({first - 1, last});
  }
  return spans;
}

std::vector<std::vector<TokenSpan>> read_spans(const std::filesystem::path& path) {
  std::vector<std::vector<TokenSpan>> all;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      all.push_back(parse_span_line(line));
    } catch (const MalformedSpanError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return all;
}

std::string format_span_line(std::span<const TokenSpan> spans) {
  std::string out;
  for (const auto& s : spans) {
    if (!out.empty()) out += ' ';
    out += std::to_string(s.begin + 1) + ":" + std::to_string(s.end);
  }
  return out;
}

std::vector<Instance> read_instances(const std::filesystem::path& path) {
  std::vector<Instance> instances;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      instances.push_back(instance_from_json(line));
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return instances;
}

}  // namespace wordorder
