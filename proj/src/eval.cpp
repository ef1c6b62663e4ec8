#include "wordorder/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "wordorder/error.hpp"
#include "wordorder/vocabulary.hpp"

namespace wordorder {

namespace {

std::string ngram_key(std::span<const std::string> tokens, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = start; i < start + n; ++i) {
    key += tokens[i];
    key += '\x1f';
  }
  return key;
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hypothesis_length += other.hypothesis_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats sentence_stats(std::span<const std::string> hypothesis, std::span<const std::string> reference) {
  BleuStats stats;
  stats.hypothesis_length = hypothesis.size();
  stats.reference_length = reference.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    if (hypothesis.size() < n) continue;
    std::unordered_map<std::string, std::uint64_t> ref_counts;
    for (std::size_t i = 0; i + n <= reference.size(); ++i) ++ref_counts[ngram_key(reference, i, n)];
    std::unordered_map<std::string, std::uint64_t> hyp_counts;
    for (std::size_t i = 0; i + n <= hypothesis.size(); ++i) ++hyp_counts[ngram_key(hypothesis, i, n)];
    stats.totals[n - 1] = hypothesis.size() - n + 1;
    for (const auto& [gram, c] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) stats.matches[n - 1] += std::min(c, it->second);
    }
  }
  return stats;
}

BleuScore bleu_from_stats(const BleuStats& stats) {
  BleuScore score;
  score.hypothesis_length = stats.hypothesis_length;
  score.reference_length = stats.reference_length;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    score.precisions[n] =
        stats.totals[n] == 0 ? 0.0 : static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]);
    if (score.precisions[n] == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(score.precisions[n]);
    }
  }
  const double c = static_cast<double>(stats.hypothesis_length);
  const double r = static_cast<double>(stats.reference_length);
  score.brevity_penalty = c >= r ? 1.0 : (c == 0.0 ? 0.0 : std::exp(1.0 - r / c));
  score.bleu = zero ? 0.0 : 100.0 * score.brevity_penalty * std::exp(log_sum / 4.0);
  return score;
}

BleuScore corpus_bleu(const std::vector<Sentence>& references, const std::vector<Sentence>& hypotheses) {
  if (references.size() != hypotheses.size()) {
    throw AlignmentError("BLEU needs one hypothesis per reference (" + std::to_string(hypotheses.size()) + " vs " +
                         std::to_string(references.size()) + ")");
  }
  BleuStats total;
  for (std::size_t i = 0; i < references.size(); ++i) total += sentence_stats(hypotheses[i], references[i]);
  return bleu_from_stats(total);
}

namespace {

// Position in `gold` matched by each output token.
std::vector<std::size_t> align(std::span<const std::string> gold, std::span<const std::string> output) {
  if (gold.size() != output.size()) throw AlignmentError("output and gold differ in length");
  std::map<std::string_view, std::vector<std::size_t>> positions;
  for (std::size_t g = gold.size(); g-- > 0;) positions[gold[g]].push_back(g);
  std::vector<std::size_t> matched(output.size());
  for (std::size_t p = 0; p < output.size(); ++p) {
    auto it = positions.find(output[p]);
    if (it == positions.end() || it->second.empty()) {
      throw AlignmentError("output token '" + output[p] + "' has no unmatched gold occurrence");
    }
    matched[p] = it->second.back();
    it->second.pop_back();
  }
  return matched;
}

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

std::vector<double> distortion(std::span<const std::string> gold, std::span<const std::string> output) {
  const auto matched = align(gold, output);
  std::vector<double> values(output.size());
  for (std::size_t p = 0; p < output.size(); ++p) {
    values[p] = static_cast<double>(abs_diff(p, matched[p])) / static_cast<double>(output.size());
  }
  return values;
}

void DistortionHistogram::add(std::size_t diff, std::size_t m) {
  const std::size_t bin = std::min<std::size_t>(9, (10 * diff) / m);
  ++counts[bin];
  ++total;
}

std::array<double, 10> DistortionHistogram::masses() const {
  std::array<double, 10> out{};
  if (total == 0) return out;
  for (std::size_t b = 0; b < 10; ++b) out[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  return out;
}

DistortionHistogram distortion_histogram(std::span<const std::string> gold, std::span<const std::string> output) {
  DistortionHistogram h;
  const auto matched = align(gold, output);
  for (std::size_t p = 0; p < output.size(); ++p) h.add(abs_diff(p, matched[p]), output.size());
  return h;
}

std::vector<LengthBucket> bucket_by_length(const std::vector<Sentence>& references,
                                           const std::vector<Sentence>& hypotheses, std::size_t max_len) {
  if (references.size() != hypotheses.size()) throw AlignmentError("reference/hypothesis count mismatch");
  std::map<std::size_t, std::pair<std::size_t, BleuStats>> buckets;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const std::size_t key = std::min(references[i].size(), max_len + 1);
    auto& [count, stats] = buckets[key];
    ++count;
    stats += sentence_stats(hypotheses[i], references[i]);
  }
  std::vector<LengthBucket> rows;
  for (const auto& [length, entry] : buckets) rows.push_back({length, entry.first, bleu_from_stats(entry.second)});
  return rows;
}

EvalReport evaluate(const std::vector<Sentence>& references, const std::vector<Sentence>& hypotheses,
                    std::size_t max_len) {
  const auto reserved = special_surfaces();
  for (const auto& h : hypotheses) {
    for (const auto& token : h) {
      if (std::find(reserved.begin(), reserved.end(), token) != reserved.end()) {
        throw DataError("hypothesis still contains reserved token " + token);
      }
    }
  }
  EvalReport report;
  report.corpus = corpus_bleu(references, hypotheses);
  report.length_buckets = bucket_by_length(references, hypotheses, max_len);
  report.sentences = references.size();
  report.max_len = max_len;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto h = distortion_histogram(references[i], hypotheses[i]);
    for (std::size_t b = 0; b < 10; ++b) report.distortion.counts[b] += h.counts[b];
    report.distortion.total += h.total;
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  const auto& c = report.corpus;
  std::string out;
  out += "sentences\t" + std::to_string(report.sentences) + "\n";
  out += "BLEU\t" + fixed(c.bleu, 4) + "\n";
  out += "precisions\t" + fixed(c.precisions[0], 6) + "/" + fixed(c.precisions[1], 6) + "/" +
         fixed(c.precisions[2], 6) + "/" + fixed(c.precisions[3], 6) + "\n";
  out += "brevity_penalty\t" + fixed(c.brevity_penalty, 6) + "\n";
  out += "hypothesis_length\t" + std::to_string(c.hypothesis_length) + "\n";
  out += "reference_length\t" + std::to_string(c.reference_length) + "\n";
  out += "\nBLEU by sentence length (per bucket)\n";
  out += length_table_tsv(report);
  out += "\ntoken distortion\n";
  out += distortion_table_tsv(report);
  return out;
}

std::string length_table_tsv(const EvalReport& report) {
  std::string out = "length\tsentences\tbleu\n";
  for (const auto& row : report.length_buckets) {
    const std::string label = row.length > report.max_len ? ">" + std::to_string(report.max_len)
                                                          : std::to_string(row.length);
    out += label + "\t" + std::to_string(row.sentences) + "\t" + fixed(row.score.bleu, 4) + "\n";
  }
  return out;
}

std::string distortion_table_tsv(const EvalReport& report) {
  std::string out = "bin\tcount\tmass\n";
  const auto masses = report.distortion.masses();
  for (std::size_t b = 0; b < 10; ++b) {
    out += fixed(static_cast<double>(b) / 10.0, 1) + "-" + fixed(static_cast<double>(b + 1) / 10.0, 1) + "\t" +
           std::to_string(report.distortion.counts[b]) + "\t" + fixed(masses[b], 6) + "\n";
  }
  return out;
}

}  // namespace wordorder
