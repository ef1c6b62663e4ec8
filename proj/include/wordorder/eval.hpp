#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wordorder {

using Sentence = std::vector<std::string>;

/// Clipped n-gram match counts for n = 1..4 plus lengths; sums across sentences.
struct BleuStats {
  std::array<std::uint64_t, 4> matches{};
  std::array<std::uint64_t, 4> totals{};
  std::uint64_t hypothesis_length = 0;
  std::uint64_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats sentence_stats(std::span<const std::string> hypothesis, std::span<const std::string> reference);

struct BleuScore {
  double bleu = 0.0;  // percentage, 0..100
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  std::uint64_t hypothesis_length = 0;
  std::uint64_t reference_length = 0;
};

/// Unsmoothed BLEU-4: brevity penalty times the geometric mean of the clipped
/// precisions. Any zero precision gives 0.
BleuScore bleu_from_stats(const BleuStats& stats);

/// Corpus BLEU over aligned sentence pairs. Throws AlignmentError on a count mismatch.
BleuScore corpus_bleu(const std::vector<Sentence>& references, const std::vector<Sentence>& hypotheses);

/// |output position - gold position| / M per output token. Output tokens are
/// matched to the leftmost unused gold occurrence of the same string. Throws
/// AlignmentError when the two are not rearrangements of each other.
std::vector<double> distortion(std::span<const std::string> gold, std::span<const std::string> output);

/// Ten bins [k/10, (k+1)/10); a distortion of exactly 1 falls in the last bin.
struct DistortionHistogram {
  std::array<std::uint64_t, 10> counts{};
  std::uint64_t total = 0;

  /// Bin from the exact ratio diff / m, so edges are not subject to rounding.
  void add(std::size_t diff, std::size_t m);
  std::array<double, 10> masses() const;
};

DistortionHistogram distortion_histogram(std::span<const std::string> gold, std::span<const std::string> output);

struct LengthBucket {
  std::size_t length = 0;  // gold token count; max_len + 1 marks the overflow row
  std::size_t sentences = 0;
  BleuScore score;
};

/// Per-length corpus BLEU, grouped by reference length. Lengths above `max_len`
/// share one overflow row.
std::vector<LengthBucket> bucket_by_length(const std::vector<Sentence>& references,
                                           const std::vector<Sentence>& hypotheses, std::size_t max_len = 40);

struct EvalReport {
  BleuScore corpus;
  std::vector<LengthBucket> length_buckets;
  DistortionHistogram distortion;
  std::size_t sentences = 0;
  std::size_t max_len = 40;
};

/// Full report. Hypotheses must already have UNK classes restored; any reserved
/// surface form left in a hypothesis raises DataError.
EvalReport evaluate(const std::vector<Sentence>& references, const std::vector<Sentence>& hypotheses,
                    std::size_t max_len = 40);

std::string format_report(const EvalReport& report);
std::string length_table_tsv(const EvalReport& report);
std::string distortion_table_tsv(const EvalReport& report);

}  // namespace wordorder
