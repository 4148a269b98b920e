#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emobias/corpus.hpp"
#include "emobias/feature_store.hpp"
#include "emobias/hierarchy.hpp"

namespace emobias {

// Binary entropy in bits of the split (pos, neg). 0 when either count is 0
// (including 0/0).
double binary_entropy(std::uint64_t count_pos, std::uint64_t count_neg);

struct EntropyRecord {
  std::string name;
  std::uint64_t count_pos = 0;
  std::uint64_t count_neg = 0;
  double entropy = 0.0;
};

struct EntropyHistogram {
  static constexpr std::size_t kBins = 10;

  std::string emotion;
  ConceptKind kind = ConceptKind::kObjects;
  std::size_t top_k = 200;
  std::uint64_t min_count = 5;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  // Sorted by entropy, then name.
  std::vector<EntropyRecord> records;
  // bins[i] counts entropies in [i/10, (i+1)/10); 1.0 falls in the last bin.
  std::array<std::uint64_t, kBins> bins{};
  std::uint64_t zero_entropy = 0;

  std::size_t total() const { return records.size(); }
  double zero_fraction() const;
  static double bin_low(std::size_t i) { return static_cast<double>(i) / kBins; }
  static double bin_high(std::size_t i) { return static_cast<double>(i + 1) / kBins; }
};

// Positive set: records whose label maps to `emotion` at that emotion's
// level; negative set: every other record with a label at that level.
// Candidates are the union of the top_k most frequent concepts of each set
// (ties broken by name), kept when count_pos + count_neg >= min_count.
// Throws UnknownLabel, NoConcepts.
EntropyHistogram conditional_entropy_analysis(std::span<const SampleRecord> records,
                                              const EmotionHierarchy& h, std::string_view emotion,
                                              ConceptKind kind, std::size_t top_k = 200,
                                              std::uint64_t min_count = 5);
EntropyHistogram conditional_entropy_analysis(const CorpusView& view, const EmotionHierarchy& h,
                                              std::string_view emotion, ConceptKind kind,
                                              std::size_t top_k = 200, std::uint64_t min_count = 5);

}  // namespace emobias
