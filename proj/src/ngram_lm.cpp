#include "wordorder/ngram_lm.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "wordorder/corpus.hpp"
#include "wordorder/error.hpp"

namespace wordorder {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLn10 = std::log(10.0);

// ARPA convention: anything at or below -99 is log(0).
constexpr double kArpaLogZero = -99.0;

std::uint64_t child_key(std::uint32_t parent, WordId word) {
  return (static_cast<std::uint64_t>(parent) << 32) | word;
}

}  // namespace

// ---------------------------------------------------------------------------
// Counting

NGramCounts::NGramCounts(std::size_t order) : tables_(order) {}

std::uint64_t NGramCounts::count(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > order()) return 0;
  const auto& t = tables_[ngram.size() - 1];
  auto it = t.find(std::vector<WordId>(ngram.begin(), ngram.end()));
  return it == t.end() ? 0 : it->second;
}

void NGramCounts::add(std::span<const WordId> ngram, std::uint64_t n) {
  tables_.at(ngram.size() - 1)[std::vector<WordId>(ngram.begin(), ngram.end())] += n;
}

void NGramCounts::merge(const NGramCounts& other) {
  if (other.order() != order()) throw ContractError("cannot merge counts of different orders");
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    for (const auto& [gram, n] : other.tables_[k]) tables_[k][gram] += n;
  }
}

std::uint64_t NGramCounts::count_of_counts(std::size_t k, std::uint64_t c) const {
  std::uint64_t n = 0;
  for (const auto& [gram, count] : table(k)) {
    if (k == 1 && gram[0] == special::kSentenceStart) continue;
    if (count == c) ++n;
  }
  return n;
}

bool NGramCounts::empty() const {
  return std::all_of(tables_.begin(), tables_.end(), [](const Table& t) { return t.empty(); });
}

NGramCounts count_ngrams(const std::vector<std::vector<WordId>>& sentences, std::size_t order) {
  if (order == 0 || order > kMaxNGramOrder) {
    throw ConfigError("n-gram order must be between 1 and " + std::to_string(kMaxNGramOrder));
  }
  NGramCounts counts(order);
  std::vector<WordId> padded;
  for (const auto& sentence : sentences) {
    padded.assign(1, special::kSentenceStart);
    padded.insert(padded.end(), sentence.begin(), sentence.end());
    padded.push_back(special::kSentenceEnd);
    const std::span<const WordId> all(padded);
    for (std::size_t k = 1; k <= order; ++k) {
      for (std::size_t i = 0; i + k <= padded.size(); ++i) counts.add(all.subspan(i, k));
    }
  }
  return counts;
}

NGramCounts adjust_counts(const NGramCounts& raw) {
  const std::size_t n = raw.order();
  NGramCounts adjusted(n);
  for (const auto& [gram, c] : raw.table(n)) adjusted.add(gram, c);
  for (std::size_t k = 1; k < n; ++k) {
    std::map<std::vector<WordId>, std::uint64_t> left_types;
    for (const auto& [longer, c] : raw.table(k + 1)) {
      ++left_types[std::vector<WordId>(longer.begin() + 1, longer.end())];
    }
    for (const auto& [gram, c] : raw.table(k)) {
      if (gram[0] == special::kSentenceStart) {
        adjusted.add(gram, c);
      } else {
        auto it = left_types.find(gram);
        // Every occurrence not at sentence start has a left neighbour.
        adjusted.add(gram, it == left_types.end() ? c : it->second);
      }
    }
  }
  return adjusted;
}

Discounts estimate_discounts(std::uint64_t n1, std::uint64_t n2, std::uint64_t n3, std::uint64_t n4) {
  Discounts d;
  if (n1 == 0 || n2 == 0 || n3 == 0) {
    d.fallback = true;
    return d;
  }
  const double y = static_cast<double>(n1) / (static_cast<double>(n1) + 2.0 * static_cast<double>(n2));
  d.d1 = 1.0 - 2.0 * y * static_cast<double>(n2) / static_cast<double>(n1);
  d.d2 = 2.0 - 3.0 * y * static_cast<double>(n3) / static_cast<double>(n2);
  d.d3plus = 3.0 - 4.0 * y * static_cast<double>(n4) / static_cast<double>(n3);
  if (!(d.d1 > 0.0 && d.d1 <= 1.0) || !(d.d2 > 0.0 && d.d2 <= 2.0) || !(d.d3plus > 0.0 && d.d3plus <= 3.0)) {
    return Discounts{0.5, 0.5, 0.5, true};
  }
  return d;
}

// ---------------------------------------------------------------------------
// Model storage

KneserNeyModel::KneserNeyModel(std::size_t order, std::size_t vocab_size) : order_(order), vocab_size_(vocab_size) {
  nodes_.reserve(vocab_size + 1);
  nodes_.push_back(Node{0, 0, 0, std::numeric_limits<double>::quiet_NaN(), 0.0});
  for (std::size_t w = 0; w < vocab_size; ++w) {
    nodes_.push_back(Node{static_cast<WordId>(w), 0, 1, std::numeric_limits<double>::quiet_NaN(), 0.0});
  }
}

std::optional<std::uint32_t> KneserNeyModel::child(std::uint32_t parent, WordId word) const {
  if (parent == 0) {
    if (word >= vocab_size_) return std::nullopt;
    return word + 1;
  }
  auto it = children_.find(child_key(parent, word));
  if (it == children_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t KneserNeyModel::insert(std::span<const WordId> ngram) {
  std::uint32_t node = 0;
  std::uint32_t depth = 0;
  for (auto it = ngram.rbegin(); it != ngram.rend(); ++it) {
    ++depth;
    if (auto next = child(node, *it)) {
      node = *next;
      continue;
    }
    if (depth == 1) throw ContractError("word id " + std::to_string(*it) + " outside model vocabulary");
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{*it, node, depth, std::numeric_limits<double>::quiet_NaN(), 0.0});
    children_.emplace(child_key(node, *it), id);
    node = id;
  }
  return node;
}

std::optional<std::uint32_t> KneserNeyModel::find_node(std::span<const WordId> ngram) const {
  std::uint32_t node = 0;
  for (auto it = ngram.rbegin(); it != ngram.rend(); ++it) {
    auto next = child(node, *it);
    if (!next) return std::nullopt;
    node = *next;
  }
  return node;
}

std::vector<WordId> KneserNeyModel::words_of(std::uint32_t node) const {
  std::vector<WordId> words;
  for (; node != 0; node = nodes_[node].parent) words.push_back(nodes_[node].word);
  return words;
}

std::optional<double> KneserNeyModel::stored_logprob(std::span<const WordId> ngram) const {
  auto node = find_node(ngram);
  if (!node || ngram.empty() || std::isnan(nodes_[*node].logprob)) return std::nullopt;
  return nodes_[*node].logprob;
}

std::optional<double> KneserNeyModel::stored_backoff(std::span<const WordId> context) const {
  auto node = find_node(context);
  if (!node || context.empty()) return std::nullopt;
  return nodes_[*node].backoff;
}

std::vector<std::size_t> KneserNeyModel::ngram_counts() const {
  std::vector<std::size_t> counts(order_, 0);
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!std::isnan(nodes_[i].logprob)) ++counts[nodes_[i].depth - 1];
  }
  return counts;
}

void KneserNeyModel::for_each_ngram(
    const std::function<void(std::span<const WordId>, double, double)>& visit) const {
  std::vector<std::vector<std::pair<std::vector<WordId>, std::uint32_t>>> by_order(order_);
  for (std::uint32_t i = 1; i < nodes_.size(); ++i) {
    if (std::isnan(nodes_[i].logprob)) continue;
    by_order[nodes_[i].depth - 1].emplace_back(words_of(i), i);
  }
  for (auto& entries : by_order) {
    std::sort(entries.begin(), entries.end());
    for (const auto& [words, node] : entries) visit(words, nodes_[node].logprob, nodes_[node].backoff);
  }
}

// ---------------------------------------------------------------------------
// Queries

KneserNeyModel::State KneserNeyModel::advance(WordId word, const State& state) const {
  State next = state;
  const std::size_t keep = order_ - 1;
  if (keep == 0) return next;
  if (next.size < keep) {
    next.words[next.size++] = word;
  } else {
    std::copy(next.words.begin() + 1, next.words.begin() + next.size, next.words.begin());
    next.words[next.size - 1] = word;
  }
  return next;
}

double KneserNeyModel::logprob(WordId word, const State& state) const {
  if (word >= vocab_size_) {
    throw ContractError("word id " + std::to_string(word) + " outside model vocabulary");
  }
  if (word == special::kSentenceStart) return kNegInf;
  const std::size_t n = state.size;
  std::uint32_t node = word + 1;
  double lp = nodes_[node].logprob;
  std::size_t matched = 0;
  for (std::size_t len = 1; len <= n; ++len) {
    auto next = child(node, state.words[n - len]);
    if (!next) break;
    node = *next;
    if (!std::isnan(nodes_[node].logprob)) {
      lp = nodes_[node].logprob;
      matched = len;
    }
  }
  double backoff = 0.0;
  std::uint32_t ctx = 0;
  for (std::size_t len = 1; len <= n; ++len) {
    auto next = child(ctx, state.words[n - len]);
    if (!next) break;
    ctx = *next;
    if (len > matched) backoff += nodes_[ctx].backoff;
  }
  return lp + backoff;
}

double KneserNeyModel::unigram_logprob(WordId word) const {
  if (word >= vocab_size_) {
    throw ContractError("word id " + std::to_string(word) + " outside model vocabulary");
  }
  return word == special::kSentenceStart ? kNegInf : nodes_[word + 1].logprob;
}

// ---------------------------------------------------------------------------
// Estimation

KneserNeyModel KneserNeyModel::estimate(const NGramCounts& raw, std::size_t vocab_size,
                                        const EstimateOptions& options) {
  const std::size_t n = raw.order();
  if (raw.table(1).empty()) throw DataError("cannot estimate a language model from an empty corpus");
  if (vocab_size <= special::kCount - 1) throw ContractError("vocabulary too small");
  for (const auto& [gram, c] : raw.table(1)) {
    if (gram[0] >= vocab_size) throw ContractError("count table holds ids outside the vocabulary");
  }

  const NGramCounts adjusted = adjust_counts(raw);
  KneserNeyModel model(n, vocab_size);

  // Which n-grams survive pruning; lower orders stay whenever a kept longer
  // n-gram has them as prefix or suffix.
  std::vector<std::set<std::vector<WordId>>> pruned(n);
  if (options.prune_singletons) {
    std::set<std::vector<WordId>> needed;
    for (std::size_t k = n; k >= 2; --k) {
      std::set<std::vector<WordId>> needed_lower;
      for (const auto& [gram, a] : adjusted.table(k)) {
        if (a <= 1 && !needed.contains(gram)) {
          pruned[k - 1].insert(gram);
          continue;
        }
        needed_lower.emplace(gram.begin(), gram.end() - 1);
        needed_lower.emplace(gram.begin() + 1, gram.end());
      }
      needed = std::move(needed_lower);
    }
  }

  model.discounts_.resize(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto& table = adjusted.table(k);
    std::array<std::uint64_t, 5> coc{};
    for (const auto& [gram, a] : table) {
      if (k == 1 && gram[0] == special::kSentenceStart) continue;
      if (a >= 1 && a <= 4) ++coc[a];
    }
    model.discounts_[k - 1] = estimate_discounts(coc[1], coc[2], coc[3], coc[4]);
    if (model.discounts_[k - 1].fallback) {
      model.warnings_.push_back("order " + std::to_string(k) +
                                ": degenerate counts-of-counts, using absolute discount 0.5");
    }
  }

  // Unigrams, interpolated with the uniform distribution over every word but <s>.
  {
    const Discounts& d = model.discounts_[0];
    double denominator = 0.0;
    double discounted = 0.0;
    for (const auto& [gram, a] : adjusted.table(1)) {
      if (gram[0] == special::kSentenceStart) continue;
      denominator += static_cast<double>(a);
      discounted += d.for_count(a);
    }
    const double gamma = discounted / denominator;
    const double uniform = 1.0 / static_cast<double>(vocab_size - 1);
    for (std::size_t w = 0; w < vocab_size; ++w) model.nodes_[w + 1].logprob = std::log(gamma * uniform);
    for (const auto& [gram, a] : adjusted.table(1)) {
      if (gram[0] == special::kSentenceStart) continue;
      const double u = (static_cast<double>(a) - d.for_count(a)) / denominator;
      model.nodes_[gram[0] + 1].logprob = std::log(u + gamma * uniform);
    }
    model.nodes_[special::kSentenceStart + 1].logprob = kNegInf;
  }

  for (std::size_t k = 2; k <= n; ++k) {
    const Discounts& d = model.discounts_[k - 1];
    const auto& table = adjusted.table(k);
    const auto& pruned_k = pruned[k - 1];
    for (auto group = table.begin(); group != table.end();) {
      const std::span<const WordId> context(group->first.data(), k - 1);
      auto group_end = group;
      double denominator = 0.0;
      double gamma_mass = 0.0;
      for (; group_end != table.end() && std::equal(context.begin(), context.end(), group_end->first.begin());
           ++group_end) {
        const double a = static_cast<double>(group_end->second);
        denominator += a;
        gamma_mass += pruned_k.contains(group_end->first) ? a : d.for_count(group_end->second);
      }
      const double gamma = gamma_mass / denominator;
      const auto ctx_node = model.find_node(context);
      if (!ctx_node) {
        // Only a context whose extensions were all pruned may itself be gone.
        for (auto it = group; it != group_end; ++it) {
          if (!pruned_k.contains(it->first)) throw ContractError("context missing from lower order");
        }
        group = group_end;
        continue;
      }
      model.nodes_[*ctx_node].backoff = std::log(gamma);
      for (auto it = group; it != group_end; ++it) {
        if (pruned_k.contains(it->first)) continue;
        const std::span<const WordId> gram(it->first);
        const double lower = std::exp(*model.stored_logprob(gram.subspan(1)));
        const double u = (static_cast<double>(it->second) - d.for_count(it->second)) / denominator;
        const auto node = model.insert(gram);
        model.nodes_[node].logprob = std::log(u + gamma * lower);
      }
      group = group_end;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// ARPA

namespace {

void append_number(std::string& out, double natural_log) {
  if (natural_log == kNegInf || natural_log / kLn10 <= kArpaLogZero) {
    out += "-99";
    return;
  }
  char buf[64];
  double value = natural_log / kLn10;
  if (value == 0.0) value = 0.0;  // no "-0"
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

bool parse_number(std::string_view text, double& value) {
  if (text == "-inf" || text == "-Infinity") {
    value = kNegInf;
    return true;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return false;
  value = value <= kArpaLogZero ? kNegInf : value * kLn10;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string KneserNeyModel::to_arpa(const Vocabulary& vocab) const {
  if (vocab.size() != vocab_size_) throw VocabularyMismatchError("vocabulary size differs from model");
  const auto counts = ngram_counts();
  std::string out = "\\data\\\n";
  for (std::size_t k = 1; k <= order_; ++k) {
    out += "ngram " + std::to_string(k) + "=" + std::to_string(counts[k - 1]) + "\n";
  }
  std::size_t current_order = 0;
  for_each_ngram([&](std::span<const WordId> gram, double lp, double bo) {
    if (gram.size() != current_order) {
      current_order = gram.size();
      out += "\n\\" + std::to_string(current_order) + "-grams:\n";
    }
    append_number(out, lp);
    for (std::size_t i = 0; i < gram.size(); ++i) {
      out += i == 0 ? '\t' : ' ';
      out += vocab.token(gram[i]);
    }
    if (gram.size() < order_) {
      out += '\t';
      append_number(out, bo);
    }
    out += '\n';
  });
  out += "\n\\end\\\n";
  return out;
}

KneserNeyModel KneserNeyModel::from_arpa(std::string_view text, const Vocabulary& vocab) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(trim(text.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  std::size_t i = 0;
  while (i < lines.size() && lines[i] != "\\data\\") ++i;
  if (i == lines.size()) throw ParseError(1, "missing \\data\\ header");
  ++i;

  std::vector<std::size_t> declared;
  for (; i < lines.size() && !lines[i].empty() && lines[i].starts_with("ngram "); ++i) {
    const auto spec = lines[i].substr(6);
    const auto eq = spec.find('=');
    std::size_t k = 0;
    std::size_t c = 0;
    if (eq == std::string_view::npos ||
        std::from_chars(spec.data(), spec.data() + eq, k).ptr != spec.data() + eq ||
        std::from_chars(spec.data() + eq + 1, spec.data() + spec.size(), c).ptr != spec.data() + spec.size()) {
      throw ParseError(i + 1, "malformed count line '" + std::string(lines[i]) + "'");
    }
    if (k != declared.size() + 1) throw ParseError(i + 1, "n-gram orders must be declared as 1, 2, ...");
    declared.push_back(c);
  }
  if (declared.empty()) throw ParseError(i + 1, "no n-gram counts declared");
  if (declared.size() > kMaxNGramOrder) throw ParseError(i + 1, "order exceeds supported maximum");

  KneserNeyModel model(declared.size(), vocab.size());
  for (std::size_t k = 1; k <= declared.size(); ++k) {
    while (i < lines.size() && lines[i].empty()) ++i;
    const std::string header = "\\" + std::to_string(k) + "-grams:";
    if (i == lines.size() || lines[i] != header) {
      throw ParseError(std::min(i, lines.size() - 1) + 1, "expected section header " + header);
    }
    ++i;
    std::size_t seen = 0;
    for (; i < lines.size() && !lines[i].empty() && lines[i].front() != '\\'; ++i) {
      const auto fields = split_tokens(lines[i]);
      if (fields.size() != k + 1 && fields.size() != k + 2) {
        throw ParseError(i + 1, "expected " + std::to_string(k + 1) + " or " + std::to_string(k + 2) + " fields");
      }
      double lp = 0.0;
      double bo = 0.0;
      if (!parse_number(fields[0], lp)) throw ParseError(i + 1, "bad probability '" + fields[0] + "'");
      if (fields.size() == k + 2 && !parse_number(fields[k + 1], bo)) {
        throw ParseError(i + 1, "bad backoff '" + fields[k + 1] + "'");
      }
      std::vector<WordId> gram;
      for (std::size_t f = 1; f <= k; ++f) {
        auto id = vocab.find(fields[f]);
        if (!id) throw VocabularyMismatchError("line " + std::to_string(i + 1) + ": word '" + fields[f] +
                                               "' is not in the vocabulary");
        gram.push_back(*id);
      }
      const auto node = model.insert(gram);
      if (!std::isnan(model.nodes_[node].logprob)) throw ParseError(i + 1, "duplicate n-gram");
      model.nodes_[node].logprob = gram.size() == 1 && gram[0] == special::kSentenceStart ? kNegInf : lp;
      model.nodes_[node].backoff = bo;
      ++seen;
    }
    if (seen != declared[k - 1]) {
      throw ParseError(i + 1, "section " + header + " has " + std::to_string(seen) + " entries, header declares " +
                                  std::to_string(declared[k - 1]));
    }
  }
  while (i < lines.size() && lines[i].empty()) ++i;
  if (i == lines.size() || lines[i] != "\\end\\") throw ParseError(std::min(i + 1, lines.size()), "missing \\end\\");

  for (std::size_t w = 0; w < vocab.size(); ++w) {
    if (std::isnan(model.nodes_[w + 1].logprob)) {
      throw VocabularyMismatchError("vocabulary word '" + vocab.token(static_cast<WordId>(w)) +
                                    "' has no unigram entry");
    }
  }
  return model;
}

}  // namespace wordorder
